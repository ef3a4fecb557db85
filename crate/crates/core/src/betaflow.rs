//! One-loop β-function for the metric and the linear flow of the pole
//! positions with its effect on the periods of ω.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::curve::{omega_coeff, ModelParams};
use crate::error::{Error, Result};
use crate::geometry::{threeform, threeform_closed_form};
use crate::lie::AlgebraData;
use crate::linalg::C64;

pub const C_TILDE: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct FlowState {
    pub params: ModelParams,
    pub epsilon: f64,
    pub c_flow: C64,
    pub p1_period: C64,
    pub p2_period: C64,
    pub c_tilde: f64,
    pub quad_nodes: usize,
}

impl FlowState {
    pub fn new(params: ModelParams, quad_nodes: usize) -> Result<Self> {
        let (p1_period, p2_period) = periods(&params, quad_nodes)?;
        Ok(FlowState { c_flow: params.c_flow(), params, epsilon: 0.0, p1_period, p2_period, c_tilde: C_TILDE, quad_nodes })
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// ∫ω along a polygonal path, Gauss-Legendre on each segment.
pub fn open_period_along(params: &ModelParams, path: &[C64], nodes: usize) -> Result<C64> {
    if path.len() < 2 || nodes == 0 {
        return Err(Error::Config("path needs two points and at least one node".into()));
    }
    let clearance = 0.1 * params.p1.norm().min(params.p2.norm());
    let (x, w) = gauss_legendre(nodes);
    let mut total = C64::new(0.0, 0.0);
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let d = b - a;
        let t = if d.norm_sqr() == 0.0 { 0.0 } else { (-(a.conj() * d).re / d.norm_sqr()).clamp(0.0, 1.0) };
        let dist = (a + d * t).norm();
        if dist < clearance {
            return Err(Error::Pole(format!("period path passes within {clearance:.3e} of the origin")));
        }
        // panels no longer than the distance to the double pole
        let panels = (d.norm() / dist).ceil().max(1.0) as usize;
        for k in 0..panels {
            let pa = a + d * (k as f64 / panels as f64);
            let half = d * (0.5 / panels as f64);
            for (xi, wi) in x.iter().zip(&w) {
                total += omega_coeff(params, pa + half * (1.0 + xi))? * half * *wi;
            }
        }
    }
    Ok(total)
}

/// Straight from p1 to p2, or through a waypoint on the perpendicular
/// bisector when the segment comes too close to 0.
pub fn default_period_path(params: &ModelParams) -> Vec<C64> {
    let (a, b) = (params.p1, params.p2);
    let d = b - a;
    let t = (-(a.conj() * d).re / d.norm_sqr()).clamp(0.0, 1.0);
    let clearance = 0.25 * a.norm().min(b.norm());
    if (a + d * t).norm() >= clearance {
        return vec![a, b];
    }
    let m = (a + b) * 0.5;
    let normal = C64::new(0.0, 1.0) * d / d.norm();
    let side = if (m.conj() * normal).re >= 0.0 { 1.0 } else { -1.0 };
    vec![a, m + normal * side * a.norm().max(b.norm()), b]
}

/// 2(p2−p1) − (p1+p2) Log(p2/p1), principal branch.
pub fn open_period_closed_form(params: &ModelParams) -> C64 {
    let (p1, p2) = (params.p1, params.p2);
    2.0 * (p2 - p1) - (p1 + p2) * (p2 / p1).ln()
}

/// Reduce x modulo P1 onto the representative nearest `reference`.
pub fn reduce_mod(x: C64, period: C64, reference: C64) -> C64 {
    if period.norm() < 1e-300 {
        return x;
    }
    let k = ((x - reference) / period).re.round();
    x - period * k
}

/// Closed period around a circle of radius min|p_i|/2 and the open period
/// from p1 to p2, reduced modulo the closed one onto the principal branch.
pub fn periods(params: &ModelParams, quad_nodes: usize) -> Result<(C64, C64)> {
    if quad_nodes < 8 {
        return Err(Error::Config(format!("period quadrature needs at least 8 nodes, got {quad_nodes}")));
    }
    let r = 0.5 * params.p1.norm().min(params.p2.norm());
    let mut p1_period = C64::new(0.0, 0.0);
    for k in 0..quad_nodes {
        let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / quad_nodes as f64);
        let z = e * r;
        p1_period += omega_coeff(params, z)? * z * C64::new(0.0, 2.0 * PI / quad_nodes as f64);
    }
    let raw = open_period_along(params, &default_period_path(params), quad_nodes)?;
    let p2_period = reduce_mod(raw, p1_period, open_period_closed_form(params));
    Ok((p1_period, p2_period))
}

/// p1 → p1 + δc, p2 → p2 − δc with c = p1p2/(p1−p2)², contour width kept.
pub fn flow_step(state: &FlowState, d_eps: f64) -> Result<FlowState> {
    let c = state.params.c_flow();
    let p = &state.params;
    let params = ModelParams::with_alpha_prime(p.p1 + c * d_eps, p.p2 - c * d_eps, p.eps, p.alpha_prime)
        .map_err(|e| Error::Inadmissible(format!("flow step {d_eps} leaves the admissible set: {e}")))?;
    let (p1_period, p2_period) = periods(&params, state.quad_nodes)?;
    Ok(FlowState {
        c_flow: params.c_flow(),
        params,
        epsilon: state.epsilon + d_eps,
        p1_period,
        p2_period,
        c_tilde: state.c_tilde,
        quad_nodes: state.quad_nodes,
    })
}

/// Central difference of the open period along the flow.
pub fn period_flow_derivative(state: &FlowState, h: f64) -> Result<C64> {
    let up = flow_step(state, h)?;
    let down = flow_step(state, -h)?;
    let dn = reduce_mod(down.p2_period, state.p1_period, up.p2_period);
    Ok((up.p2_period - dn) / (2.0 * h))
}

/// 1 − (c̃²/9)(p1+p2)²/(p1−p2)².
pub fn wzw_factor(params: &ModelParams, c_tilde: f64) -> C64 {
    let s = (params.p1 + params.p2) / (params.p1 - params.p2);
    1.0 - c_tilde * c_tilde / 9.0 * s * s
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaReport {
    pub algebra: String,
    pub alpha_prime: C64,
    pub c_tilde: f64,
    pub contraction_residual: f64,
    pub beta: Vec<Vec<C64>>,
    /// max |β − (α′/2πi) p1p2/(p1−p2)³ g| relative to |g|.
    pub beta_formula_residual: f64,
    pub flow_factor: C64,
    pub beta_over_g: C64,
    pub fitted_alpha_prime: C64,
    pub wzw_factor: C64,
    /// Ω from contour quadrature divided by the normalised closed form; None
    /// when p1 + p2 = 0.
    pub quadrature_threeform_ratio: Option<C64>,
    pub pass: bool,
}

fn to_rows(m: &DMatrix<C64>) -> Vec<Vec<C64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// β_ab = α′(Ric_ab − ¼ H_acd H_b^cd) with g = 2πi(p1−p2)κ, Ric = −¼κ and
/// H = c̃Ω, all in the Killing normalisation.
pub fn beta_check(params: &ModelParams, algebra: &AlgebraData) -> Result<BetaReport> {
    params.validate()?;
    let d = algebra.dim;
    let (p1, p2) = (params.p1, params.p2);
    let flow_factor = 2.0 * p1 * p2 / (p1 - p2).powi(3);
    let ratio = params.alpha_prime / C64::new(0.0, 2.0 * PI) * p1 * p2 / (p1 - p2).powi(3);
    if algebra.is_abelian() {
        return Ok(BetaReport {
            algebra: algebra.name.clone(),
            alpha_prime: params.alpha_prime,
            c_tilde: C_TILDE,
            contraction_residual: 0.0,
            beta: vec![vec![C64::new(0.0, 0.0); d]; d],
            beta_formula_residual: 0.0,
            flow_factor,
            beta_over_g: C64::new(0.0, 0.0),
            fitted_alpha_prime: params.alpha_prime,
            wzw_factor: wzw_factor(params, C_TILDE),
            quadrature_threeform_ratio: None,
            pass: true,
        });
    }
    let kil = algebra.with_killing_pairing()?;
    let kappa = &kil.kappa;
    let contraction = kil.contraction();
    let kscale = kappa.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let contraction_residual = (&contraction + kappa).iter().map(|v| v.norm()).fold(0.0, f64::max) / kscale;

    let s = params.metric_scale();
    let g = kappa * s;
    let g_inv = kil.kappa_inv.clone() / s;
    let h: Vec<C64> = {
        let mut h = vec![C64::new(0.0, 0.0); d * d * d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    h[(a * d + b) * d + c] = threeform_closed_form(params, &kil, a, b, c) * C_TILDE;
                }
            }
        }
        h
    };
    let at = |a: usize, b: usize, c: usize| h[(a * d + b) * d + c];
    let mut hh = DMatrix::<C64>::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..d {
                for e in 0..d {
                    for dd in 0..d {
                        for f in 0..d {
                            let w = g_inv[(c, dd)] * g_inv[(e, f)];
                            if w != C64::new(0.0, 0.0) {
                                acc += at(a, c, e) * at(b, dd, f) * w;
                            }
                        }
                    }
                }
            }
            hh[(a, b)] = acc;
        }
    }
    let ricci = kappa * C64::new(-0.25, 0.0);
    let beta = (ricci - hh * C64::new(0.25, 0.0)) * params.alpha_prime;
    let gscale = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let beta_formula_residual = (&beta - &g * ratio).iter().map(|v| v.norm()).fold(0.0, f64::max) / gscale;
    let beta_over_g = beta[(0, 0)] / g[(0, 0)];
    let fitted_alpha_prime = params.alpha_prime * flow_factor / beta_over_g;

    let quadrature_threeform_ratio = if (p1 + p2).norm() > 1e-12 * (p1.norm() + p2.norm()) && d >= 3 {
        let (a, b, c) = (0, 1, 2);
        let closed = threeform_closed_form(params, &kil, a, b, c);
        if closed.norm() > 0.0 {
            Some(threeform(params, &kil, a, b, c, 128)? / closed)
        } else {
            None
        }
    } else {
        None
    };
    let pass = contraction_residual <= 1e-12 && beta_formula_residual <= 1e-10;
    Ok(BetaReport {
        algebra: algebra.name.clone(),
        alpha_prime: params.alpha_prime,
        c_tilde: C_TILDE,
        contraction_residual,
        beta: to_rows(&beta),
        beta_formula_residual,
        flow_factor,
        beta_over_g,
        fitted_alpha_prime,
        wzw_factor: wzw_factor(params, C_TILDE),
        quadrature_threeform_ratio,
        pass,
    })
}
