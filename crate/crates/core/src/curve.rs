//! The two-pole spectral curve: the 1-form ω = (z−p1)(z−p2)/z² dz, its Szegő
//! kernel, and the inverse Dolbeault operators acting on contour-concentrated
//! forms.
//!
//! Forms supported near the contour |z−p1| = ε are represented through a
//! radial mollified step s (1 inside, 0 outside). A form is Σ_m d_m(θ) s^m ∂̄s
//! and a function is Σ_k c_k(θ) s^k. Integrals over the annulus then reduce
//! to contour integrals weighted by ∫₀¹ s^{k+m} ds = 1/(k+m+1), whatever the
//! mollifier profile.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{AlgElement, AlgebraData};
use crate::linalg::C64;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p1: C64,
    pub p2: C64,
    pub eps: f64,
    pub alpha_prime: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Inside,
    Outside,
}

impl ModelParams {
    /// Validated parameters with α′ = 4πi.
    pub fn new(p1: C64, p2: C64, eps: f64) -> Result<Self> {
        Self::with_alpha_prime(p1, p2, eps, C64::new(0.0, 4.0 * PI))
    }

    pub fn with_alpha_prime(p1: C64, p2: C64, eps: f64, alpha_prime: C64) -> Result<Self> {
        let p = ModelParams { p1, p2, eps, alpha_prime };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |z: C64| z.re.is_finite() && z.im.is_finite();
        if !finite(self.p1) || !finite(self.p2) || !self.eps.is_finite() || !finite(self.alpha_prime) {
            return Err(Error::Inadmissible("non-finite model parameter".into()));
        }
        if (self.p1 - self.p2).norm() == 0.0 {
            return Err(Error::Inadmissible(
                "marked points must be distinct (p1 != p2, pi != 0 side condition on omega)".into(),
            ));
        }
        if self.p1.norm() == 0.0 || self.p2.norm() == 0.0 {
            return Err(Error::Inadmissible(
                "marked points must avoid the double pole at 0 (pi != 0 side condition on omega)".into(),
            ));
        }
        let bound = (self.p1 - self.p2).norm().min(self.p1.norm()) / 4.0;
        if !(self.eps > 0.0 && self.eps < bound) {
            return Err(Error::Inadmissible(format!(
                "contour separation: need 0 < eps < min(|p1-p2|, |p1|)/4 = {bound}, got {}",
                self.eps
            )));
        }
        Ok(())
    }

    /// Largest admissible-with-margin radius, min(|p1−p2|, |p1|)/8.
    pub fn default_eps(p1: C64, p2: C64) -> f64 {
        (p1 - p2).norm().min(p1.norm()) / 8.0
    }

    /// f(z) = (p1−p2) z / ((z−p1)(z−p2)).
    pub fn f(&self, z: C64) -> C64 {
        (self.p1 - self.p2) * z / ((z - self.p1) * (z - self.p2))
    }

    pub fn region(&self, z: C64) -> Region {
        if (z - self.p1).norm() < self.eps {
            Region::Inside
        } else {
            Region::Outside
        }
    }

    /// 2πi(p1−p2): the metric scale g = ρ κ.
    pub fn metric_scale(&self) -> C64 {
        2.0 * PI * I * (self.p1 - self.p2)
    }

    /// (p1+p2)/(p1−p2).
    pub fn chirality_ratio(&self) -> C64 {
        (self.p1 + self.p2) / (self.p1 - self.p2)
    }

    /// p1 p2 / (p1−p2)².
    pub fn c_flow(&self) -> C64 {
        let d = self.p1 - self.p2;
        self.p1 * self.p2 / (d * d)
    }
}

/// (z−p1)(z−p2)/z².
pub fn omega_coeff(params: &ModelParams, z: C64) -> Result<C64> {
    if z.norm() == 0.0 {
        return Err(Error::Pole("omega has a double pole at z = 0".into()));
    }
    Ok((z - params.p1) * (z - params.p2) / (z * z))
}

/// S(z, z′) = z z′ / ((z−z′)(z−p1)(z′−p2)) times the Casimir.
#[derive(Debug, Clone)]
pub struct SzegoValue {
    pub coeff: C64,
    /// coeff · κ^{ab}, the coefficients of t_a ⊗ t_b.
    pub tensor: DMatrix<C64>,
}

pub fn szego_coefficient(params: &ModelParams, z: C64, zp: C64) -> Result<C64> {
    if z == zp {
        return Err(Error::Pole("Szego kernel on the diagonal".into()));
    }
    if z == params.p1 {
        return Err(Error::Pole("Szego kernel at z = p1".into()));
    }
    if zp == params.p2 {
        return Err(Error::Pole("Szego kernel at z' = p2".into()));
    }
    Ok(z * zp / ((z - zp) * (z - params.p1) * (zp - params.p2)))
}

pub fn szego(params: &ModelParams, algebra: &AlgebraData, z: C64, zp: C64) -> Result<SzegoValue> {
    let coeff = szego_coefficient(params, z, zp)?;
    Ok(SzegoValue { coeff, tensor: &algebra.casimir * coeff })
}

/// Residue along the diagonal, (1/2πi)∮_{|z−z′|=r} S(z,z′) ω(z′) dz, by
/// trapezoid quadrature. The kernel is weighted by ω in its second slot, the
/// trivialisation in which the inverse Dolbeault operators are written.
pub fn szego_residue(
    params: &ModelParams,
    algebra: &AlgebraData,
    zp: C64,
    radius: f64,
    nodes: usize,
) -> Result<DMatrix<C64>> {
    let w = omega_coeff(params, zp)?;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..nodes {
        let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
        let z = zp + radius * e;
        let dz = I * radius * e * (2.0 * PI / nodes as f64);
        acc += szego_coefficient(params, z, zp)? * w * dz;
    }
    Ok(&algebra.casimir * (acc / (2.0 * PI * I)))
}

/// Quadrature nodes on z(θ) = p1 + ε e^{iθ}.
#[derive(Debug, Clone)]
pub struct ContourGrid {
    pub n: usize,
    pub theta: Vec<f64>,
    pub z: Vec<C64>,
    /// z′(θ) dθ with dθ = 2π/N.
    pub dz: Vec<C64>,
    pub omega: Vec<C64>,
}

impl ContourGrid {
    pub fn new(params: &ModelParams, n: usize) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::Config(format!("contour node count must be even and >= 16, got {n}")));
        }
        let theta: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let e: Vec<C64> = theta.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        let z: Vec<C64> = e.iter().map(|&e| params.p1 + params.eps * e).collect();
        let dz = e.iter().map(|&e| I * params.eps * e * (2.0 * PI / n as f64)).collect();
        let omega = z.iter().map(|&z| (z - params.p1) * (z - params.p2) / (z * z)).collect();
        Ok(ContourGrid { n, theta, z, dz, omega })
    }
}

/// A (0,1)-form concentrated on the contour: `layers[m][k]` is d_m(θ_k), the
/// coefficient of s^m ∂̄s.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourDensity {
    pub n: usize,
    pub layers: Vec<Vec<AlgElement>>,
}

/// A function near the contour: `layers[k][j]` is c_k(θ_j), the coefficient
/// of s^k.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub n: usize,
    pub layers: Vec<Vec<AlgElement>>,
}

impl ContourDensity {
    pub fn zero(dim: usize, n: usize) -> Self {
        ContourDensity { n, layers: vec![vec![AlgElement::zero(dim); n]] }
    }

    /// Single-layer density d_0(θ) = g(z(θ)).
    pub fn from_fn(grid: &ContourGrid, g: impl Fn(C64) -> AlgElement) -> Self {
        ContourDensity { n: grid.n, layers: vec![grid.z.iter().map(|&z| g(z)).collect()] }
    }

    /// (θ_k, d_0(θ_k)) pairs.
    pub fn samples(&self, grid: &ContourGrid) -> Vec<(f64, AlgElement)> {
        grid.theta.iter().cloned().zip(self.layers[0].iter().cloned()).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        ContourDensity {
            n: self.n,
            layers: self.layers.iter().map(|l| l.iter().map(|x| x.scale(s)).collect()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        ContourDensity { n: self.n, layers: add_layers(&self.layers, &other.layers) }
    }
}

impl BoundaryField {
    pub fn zero(dim: usize, n: usize) -> Self {
        BoundaryField { n, layers: vec![vec![AlgElement::zero(dim); n]] }
    }

    pub fn scale(&self, s: C64) -> Self {
        BoundaryField {
            n: self.n,
            layers: self.layers.iter().map(|l| l.iter().map(|x| x.scale(s)).collect()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        BoundaryField { n: self.n, layers: add_layers(&self.layers, &other.layers) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Value just inside (s = 1) or just outside (s = 0) at node j.
    pub fn boundary_value(&self, j: usize, region: Region) -> AlgElement {
        match region {
            Region::Outside => self.layers[0][j].clone(),
            Region::Inside => {
                let mut acc = self.layers[0][j].clone();
                for l in &self.layers[1..] {
                    acc = &acc + &l[j];
                }
                acc
            }
        }
    }
}

fn add_layers(a: &[Vec<AlgElement>], b: &[Vec<AlgElement>]) -> Vec<Vec<AlgElement>> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|m| match (a.get(m), b.get(m)) {
            (Some(x), Some(y)) => x.iter().zip(y).map(|(u, v)| u + v).collect(),
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.clone(),
            (None, None) => unreachable!(),
        })
        .collect()
}

/// The concentrated basis form A_a = f(z) t_a ∂̄s.
pub fn basis_density(params: &ModelParams, algebra: &AlgebraData, a: usize, n: usize) -> Result<ContourDensity> {
    if a >= algebra.dim {
        return Err(Error::Shape { expected: algebra.dim, got: a });
    }
    let grid = ContourGrid::new(params, n)?;
    let t = algebra.basis_element(a);
    Ok(ContourDensity::from_fn(&grid, |z| t.scale(params.f(z))))
}

/// Which inverse Dolbeault operator: the one with poles allowed at p1 or p2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    One,
    Two,
}

impl Side {
    fn pole(self, params: &ModelParams) -> C64 {
        match self {
            Side::One => params.p1,
            Side::Two => params.p2,
        }
    }
}

fn check_density(algebra: &AlgebraData, rho: &ContourDensity) -> Result<()> {
    for l in &rho.layers {
        if l.len() != rho.n {
            return Err(Error::Shape { expected: rho.n, got: l.len() });
        }
        if let Some(x) = l.iter().find(|x| x.dim() != algebra.dim) {
            return Err(Error::Shape { expected: algebra.dim, got: x.dim() });
        }
    }
    Ok(())
}

/// Σ_m d_m/(m+1): the integrand seen by off-contour evaluation.
fn collapsed(rho: &ContourDensity, dim: usize) -> Vec<AlgElement> {
    let mut out = vec![AlgElement::zero(dim); rho.n];
    for (m, l) in rho.layers.iter().enumerate() {
        let w = C64::new(1.0 / (m as f64 + 1.0), 0.0);
        for (o, x) in out.iter_mut().zip(l) {
            o.axpy(w, x);
        }
    }
    out
}

fn eval_inverse(side: Side, params: &ModelParams, algebra: &AlgebraData, rho: &ContourDensity, w: C64) -> Result<AlgElement> {
    check_density(algebra, rho)?;
    let grid = ContourGrid::new(params, rho.n)?;
    let pole = side.pole(params);
    if (w - pole).norm() == 0.0 {
        return Err(Error::Pole(format!("inverse Dolbeault operator evaluated at its pole {pole}")));
    }
    let gap = ((w - params.p1).norm() - params.eps).abs();
    if gap < params.eps / rho.n as f64 {
        return Err(Error::IllConditioned(format!(
            "evaluation point {w} lies within eps/N = {} of the contour",
            params.eps / rho.n as f64
        )));
    }
    let g = collapsed(rho, algebra.dim);
    let mut out = AlgElement::zero(algebra.dim);
    for j in 0..rho.n {
        let zp = grid.z[j];
        let kernel = 1.0 / (zp - w) + pole / ((w - pole) * zp);
        out.axpy(kernel * grid.dz[j] / (2.0 * PI * I), &g[j]);
    }
    Ok(out)
}

/// (∂̄₁⁻¹ρ)(w) = (1/2πi)∮ K(w,z′) ρ(z′) dz′ with K = −S(w,z′)ω(z′)
/// = 1/(z′−w) + p1/((w−p1)z′): the section with a simple pole at p1 and
/// zeroes at 0 and ∞.
pub fn dbar1_inv(params: &ModelParams, algebra: &AlgebraData, rho: &ContourDensity, w: C64) -> Result<AlgElement> {
    eval_inverse(Side::One, params, algebra, rho, w)
}

/// (∂̄₂⁻¹ρ)(w) with kernel S(z′,w)ω(z′) = 1/(z′−w) + p2/((w−p2)z′): slots
/// swapped and sign flipped relative to [`dbar1_inv`].
pub fn dbar2_inv(params: &ModelParams, algebra: &AlgebraData, rho: &ContourDensity, w: C64) -> Result<AlgElement> {
    eval_inverse(Side::Two, params, algebra, rho, w)
}

struct Spectral {
    planner: FftPlanner<f64>,
}

impl Spectral {
    fn new() -> Self {
        Spectral { planner: FftPlanner::new() }
    }

    /// Negative-frequency part in ζ = e^{iθ}, Nyquist mode split evenly.
    fn negative_part(&mut self, g: &[AlgElement], dim: usize) -> Vec<AlgElement> {
        let n = g.len();
        let fwd = self.planner.plan_fft_forward(n);
        let inv = self.planner.plan_fft_inverse(n);
        let mut out = vec![AlgElement::zero(dim); n];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for a in 0..dim {
            for (b, x) in buf.iter_mut().zip(g) {
                *b = x.coeffs[a];
            }
            if buf.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                continue;
            }
            fwd.process(&mut buf);
            for v in buf.iter_mut().take(n / 2) {
                *v = C64::new(0.0, 0.0);
            }
            buf[n / 2] *= 0.5;
            inv.process(&mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                o.coeffs[a] = b / n as f64;
            }
        }
        out
    }
}

/// Outer boundary value of the holomorphic part of ∂̄ᵢ⁻¹(G ∂̄s):
/// −G₋ + pᵢ/(z−pᵢ) · (1/2πi)∮ G/z′ dz′.
fn outer_value(side: Side, params: &ModelParams, grid: &ContourGrid, g: &[AlgElement], dim: usize, sp: &mut Spectral) -> Vec<AlgElement> {
    let pole = side.pole(params);
    let mut m0 = AlgElement::zero(dim);
    for j in 0..grid.n {
        m0.axpy(grid.dz[j] / (grid.z[j] * 2.0 * PI * I), &g[j]);
    }
    let neg = sp.negative_part(g, dim);
    neg.iter()
        .zip(&grid.z)
        .map(|(x, &z)| {
            let mut v = x.scale(C64::new(-1.0, 0.0));
            v.axpy(pole / (z - pole), &m0);
            v
        })
        .collect()
}

fn inverse_field(side: Side, params: &ModelParams, algebra: &AlgebraData, rho: &ContourDensity) -> Result<BoundaryField> {
    check_density(algebra, rho)?;
    let grid = ContourGrid::new(params, rho.n)?;
    let dim = algebra.dim;
    let mut sp = Spectral::new();
    let mut layers = vec![vec![AlgElement::zero(dim); rho.n]; rho.layers.len() + 1];
    for (m, d) in rho.layers.iter().enumerate() {
        let w = C64::new(1.0 / (m as f64 + 1.0), 0.0);
        let out = outer_value(side, params, &grid, d, dim, &mut sp);
        for j in 0..rho.n {
            layers[0][j].axpy(w, &out[j]);
            layers[m + 1][j].axpy(w, &d[j]);
        }
    }
    Ok(BoundaryField { n: rho.n, layers })
}

/// ∂̄₁⁻¹ρ as a layered function on the contour annulus.
pub fn dbar1_inv_field(params: &ModelParams, algebra: &AlgebraData, rho: &ContourDensity) -> Result<BoundaryField> {
    inverse_field(Side::One, params, algebra, rho)
}

/// ∂̄₂⁻¹ρ as a layered function on the contour annulus.
pub fn dbar2_inv_field(params: &ModelParams, algebra: &AlgebraData, rho: &ContourDensity) -> Result<BoundaryField> {
    inverse_field(Side::Two, params, algebra, rho)
}

fn product_layers(
    algebra: &AlgebraData,
    a: &[Vec<AlgElement>],
    b: &[Vec<AlgElement>],
    n: usize,
) -> Vec<Vec<AlgElement>> {
    let mut out = vec![vec![AlgElement::zero(algebra.dim); n]; a.len() + b.len() - 1];
    for (k, la) in a.iter().enumerate() {
        for (m, lb) in b.iter().enumerate() {
            for j in 0..n {
                let br = algebra.bracket_unchecked(&la[j], &lb[j]);
                out[k + m][j] = &out[k + m][j] + &br;
            }
        }
    }
    out
}

/// [ρ, u]: bracket of a form with a function, again a concentrated form.
pub fn bracket_form_field(algebra: &AlgebraData, rho: &ContourDensity, u: &BoundaryField) -> Result<ContourDensity> {
    if rho.n != u.n {
        return Err(Error::Shape { expected: rho.n, got: u.n });
    }
    Ok(ContourDensity { n: rho.n, layers: product_layers(algebra, &rho.layers, &u.layers, rho.n) })
}

/// [u, v] of two layered functions.
pub fn bracket_fields(algebra: &AlgebraData, u: &BoundaryField, v: &BoundaryField) -> Result<BoundaryField> {
    if u.n != v.n {
        return Err(Error::Shape { expected: u.n, got: v.n });
    }
    Ok(BoundaryField { n: u.n, layers: product_layers(algebra, &u.layers, &v.layers, u.n) })
}

/// ∫_C ω ∧ ⟨u, ρ⟩ = Σ_{k,m} ∮ ω ⟨c_k, d_m⟩ dz / (k+m+1).
pub fn pair(params: &ModelParams, algebra: &AlgebraData, u: &BoundaryField, rho: &ContourDensity) -> Result<C64> {
    if rho.n != u.n {
        return Err(Error::Shape { expected: rho.n, got: u.n });
    }
    check_density(algebra, rho)?;
    let grid = ContourGrid::new(params, rho.n)?;
    let mut acc = C64::new(0.0, 0.0);
    for (k, lc) in u.layers.iter().enumerate() {
        for (m, ld) in rho.layers.iter().enumerate() {
            let w = 1.0 / (k + m + 1) as f64;
            let mut s = C64::new(0.0, 0.0);
            for j in 0..rho.n {
                s += grid.omega[j] * algebra.pairing_unchecked(&lc[j], &ld[j]) * grid.dz[j];
            }
            acc += s * w;
        }
    }
    Ok(acc)
}

/// max over basis pairs of |∮ω⟨∂̄₁⁻¹A_a, A_b⟩ + ∮ω⟨∂̄₂⁻¹A_b, A_a⟩|, relative
/// to the largest single term.
pub fn adjointness_residual(params: &ModelParams, algebra: &AlgebraData, n: usize) -> Result<f64> {
    let a: Vec<ContourDensity> = (0..algebra.dim).map(|k| basis_density(params, algebra, k, n)).collect::<Result<_>>()?;
    let inv1: Vec<BoundaryField> = a.iter().map(|r| dbar1_inv_field(params, algebra, r)).collect::<Result<_>>()?;
    let inv2: Vec<BoundaryField> = a.iter().map(|r| dbar2_inv_field(params, algebra, r)).collect::<Result<_>>()?;
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for i in 0..algebra.dim {
        for j in 0..algebra.dim {
            let l = pair(params, algebra, &inv1[i], &a[j])?;
            let r = pair(params, algebra, &inv2[j], &a[i])?;
            err = err.max((l + r).norm());
            scale = scale.max(l.norm()).max(r.norm());
        }
    }
    Ok(if scale > 0.0 { err / scale } else { err })
}
