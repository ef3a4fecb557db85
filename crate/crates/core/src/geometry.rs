//! Metric, 3-form and metric derivative on the moduli space, computed by
//! contour quadrature on the concentrated basis, plus closed-form references
//! and the real-slice signature rule.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curve::{
    basis_density, bracket_form_field, dbar1_inv_field, dbar2_inv_field, pair, BoundaryField, ContourDensity,
    ContourGrid, ModelParams,
};
use crate::error::{Error, Result};
use crate::lie::{AlgElement, AlgebraData};
use crate::linalg::C64;

const I: C64 = C64::new(0.0, 1.0);

/// The basepoint tensors, with complex entries serialized as `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryTensors {
    pub dim: usize,
    pub nodes: usize,
    pub g: Vec<Vec<C64>>,
    /// g / (2πi).
    pub g_real: Vec<Vec<C64>>,
    /// `omega3[a][b][c]` = Ω_abc.
    pub omega3: Vec<Vec<Vec<C64>>>,
    /// `dg[a][b][c]` = ∂g_ab/∂λ^c at λ = 0.
    pub dg: Vec<Vec<Vec<C64>>>,
}

/// Basis forms and their two antiderivatives, shared by every tensor.
pub(crate) struct BasisCache {
    pub a: Vec<ContourDensity>,
    pub inv1: Vec<BoundaryField>,
    pub inv2: Vec<BoundaryField>,
}

impl BasisCache {
    pub fn new(params: &ModelParams, algebra: &AlgebraData, n: usize) -> Result<Self> {
        let a: Vec<ContourDensity> =
            (0..algebra.dim).map(|k| basis_density(params, algebra, k, n)).collect::<Result<_>>()?;
        let inv1 = a.iter().map(|r| dbar1_inv_field(params, algebra, r)).collect::<Result<_>>()?;
        let inv2 = a.iter().map(|r| dbar2_inv_field(params, algebra, r)).collect::<Result<_>>()?;
        Ok(BasisCache { a, inv1, inv2 })
    }
}

fn check_index(algebra: &AlgebraData, idx: &[usize]) -> Result<()> {
    match idx.iter().find(|&&i| i >= algebra.dim) {
        Some(&i) => Err(Error::Shape { expected: algebra.dim, got: i }),
        None => Ok(()),
    }
}

pub(crate) const PERMS: [([usize; 3], f64); 6] = [
    ([0, 1, 2], 1.0),
    ([1, 2, 0], 1.0),
    ([2, 0, 1], 1.0),
    ([1, 0, 2], -1.0),
    ([0, 2, 1], -1.0),
    ([2, 1, 0], -1.0),
];

/// g_ab = ∫ω∧⟨∂̄₁⁻¹A_a, A_b⟩ + ∫ω∧⟨∂̄₁⁻¹A_b, A_a⟩.
pub fn metric(params: &ModelParams, algebra: &AlgebraData, a: usize, b: usize, n: usize) -> Result<C64> {
    check_index(algebra, &[a, b])?;
    let da = basis_density(params, algebra, a, n)?;
    let db = basis_density(params, algebra, b, n)?;
    let ua = dbar1_inv_field(params, algebra, &da)?;
    let ub = dbar1_inv_field(params, algebra, &db)?;
    Ok(pair(params, algebra, &ua, &db)? + pair(params, algebra, &ub, &da)?)
}

fn threeform_term(params: &ModelParams, algebra: &AlgebraData, cache: &BasisCache, a: usize, b: usize, c: usize) -> Result<C64> {
    let form = bracket_form_field(algebra, &cache.a[a], &cache.inv1[b])?;
    pair(params, algebra, &cache.inv2[c], &form)
}

/// Ω_abc = Σ_{σ∈S₃} sgn σ ∫ω∧⟨[A_σ1, ∂̄₁⁻¹A_σ2], ∂̄₂⁻¹A_σ3⟩.
pub fn threeform(params: &ModelParams, algebra: &AlgebraData, a: usize, b: usize, c: usize, n: usize) -> Result<C64> {
    check_index(algebra, &[a, b, c])?;
    let cache = BasisCache::new(params, algebra, n)?;
    let idx = [a, b, c];
    let mut acc = C64::new(0.0, 0.0);
    for (p, s) in PERMS {
        acc += s * threeform_term(params, algebra, &cache, idx[p[0]], idx[p[1]], idx[p[2]])?;
    }
    Ok(acc)
}

fn nested1(params: &ModelParams, algebra: &AlgebraData, cache: &BasisCache, c: usize, a: usize) -> Result<BoundaryField> {
    let form = bracket_form_field(algebra, &cache.a[c], &cache.inv1[a])?;
    dbar1_inv_field(params, algebra, &form)
}

/// ∂g_ab/∂λ^c = −∫ω∧⟨∂̄₁⁻¹[A_c, ∂̄₁⁻¹A_a], A_b⟩ − (a ↔ b).
pub fn metric_derivative(params: &ModelParams, algebra: &AlgebraData, a: usize, b: usize, c: usize, n: usize) -> Result<C64> {
    check_index(algebra, &[a, b, c])?;
    let cache = BasisCache::new(params, algebra, n)?;
    let ta = nested1(params, algebra, &cache, c, a)?;
    let tb = nested1(params, algebra, &cache, c, b)?;
    Ok(-pair(params, algebra, &ta, &cache.a[b])? - pair(params, algebra, &tb, &cache.a[a])?)
}

/// g(A_b, ∂̄φ) for φ = ψ·s, with ψ holomorphic on a neighbourhood of the
/// closed disc |z−p1| ≤ ε. Then ∂̄φ = ψ ∂̄s is itself a concentrated form.
pub fn gauge_invariance_residual(
    params: &ModelParams,
    algebra: &AlgebraData,
    phi: impl Fn(C64) -> AlgElement,
    b: usize,
    n: usize,
) -> Result<C64> {
    check_index(algebra, &[b])?;
    let grid = ContourGrid::new(params, n)?;
    let dphi = ContourDensity::from_fn(&grid, phi);
    let ab = basis_density(params, algebra, b, n)?;
    let u_b = dbar1_inv_field(params, algebra, &ab)?;
    let u_phi = dbar1_inv_field(params, algebra, &dphi)?;
    Ok(pair(params, algebra, &u_b, &dphi)? + pair(params, algebra, &u_phi, &ab)?)
}

/// Signature of the real-slice metric: one block λᵢ·Σ(κ) per marked zero,
/// where a sign flip swaps the (positive, negative) counts.
pub fn signature(lambdas: &[i32], sigma_kappa: (usize, usize)) -> Result<Vec<(usize, usize)>> {
    if lambdas.is_empty() {
        return Err(Error::Config("signature requires at least one lambda".into()));
    }
    lambdas
        .iter()
        .map(|&l| match l {
            1 => Ok(sigma_kappa),
            -1 => Ok((sigma_kappa.1, sigma_kappa.0)),
            other => Err(Error::Config(format!("lambda entries must be +1 or -1, got {other}"))),
        })
        .collect()
}

/// 2πi(p1−p2)κ_ab.
pub fn metric_closed_form(params: &ModelParams, algebra: &AlgebraData, a: usize, b: usize) -> C64 {
    params.metric_scale() * algebra.kappa[(a, b)]
}

/// κ_cd f_ab^d.
pub fn structure_tensor(algebra: &AlgebraData, a: usize, b: usize, c: usize) -> C64 {
    (0..algebra.dim).map(|d| algebra.kappa[(c, d)] * algebra.f(a, b, d)).sum()
}

/// −(2πi/3)(p1+p2) κ_cd f_ab^d, the reference value quoted for Ω.
pub fn threeform_closed_form(params: &ModelParams, algebra: &AlgebraData, a: usize, b: usize, c: usize) -> C64 {
    -(2.0 * PI * I / 3.0) * (params.p1 + params.p2) * structure_tensor(algebra, a, b, c)
}

/// 2πi(p1+p2) κ_cd f_ab^d: what the S₃ sum evaluates to for any mollifier.
pub fn threeform_quadrature_closed_form(params: &ModelParams, algebra: &AlgebraData, a: usize, b: usize, c: usize) -> C64 {
    2.0 * PI * I * (params.p1 + params.p2) * structure_tensor(algebra, a, b, c)
}

pub(crate) fn rank3(dim: usize) -> Vec<Vec<Vec<C64>>> {
    vec![vec![vec![C64::new(0.0, 0.0); dim]; dim]; dim]
}

/// All basepoint tensors at node count `n`.
pub fn geometry_tensors(params: &ModelParams, algebra: &AlgebraData, n: usize) -> Result<GeometryTensors> {
    let d = algebra.dim;
    let cache = BasisCache::new(params, algebra, n)?;
    let mut g = vec![vec![C64::new(0.0, 0.0); d]; d];
    for a in 0..d {
        for b in a..d {
            let v = pair(params, algebra, &cache.inv1[a], &cache.a[b])? + pair(params, algebra, &cache.inv1[b], &cache.a[a])?;
            g[a][b] = v;
            g[b][a] = v;
        }
    }
    let mut term = rank3(d);
    for a in 0..d {
        for b in 0..d {
            if a == b {
                continue;
            }
            let form = bracket_form_field(algebra, &cache.a[a], &cache.inv1[b])?;
            for (c, t) in term[a][b].iter_mut().enumerate() {
                *t = pair(params, algebra, &cache.inv2[c], &form)?;
            }
        }
    }
    let mut omega3 = rank3(d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let idx = [a, b, c];
                omega3[a][b][c] = PERMS.iter().map(|(p, s)| *s * term[idx[p[0]]][idx[p[1]]][idx[p[2]]]).sum();
            }
        }
    }
    let mut nested = Vec::with_capacity(d * d);
    for c in 0..d {
        for a in 0..d {
            nested.push(nested1(params, algebra, &cache, c, a)?);
        }
    }
    let mut dg = rank3(d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                dg[a][b][c] = -pair(params, algebra, &nested[c * d + a], &cache.a[b])?
                    - pair(params, algebra, &nested[c * d + b], &cache.a[a])?;
            }
        }
    }
    let g_real = g.iter().map(|row| row.iter().map(|v| v / (2.0 * PI * I)).collect()).collect();
    Ok(GeometryTensors { dim: d, nodes: n, g, g_real, omega3, dg })
}

impl GeometryTensors {
    pub fn g_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |a, b| self.g[a][b])
    }

    /// Symmetry of g, total antisymmetry of Ω and nondegeneracy of g_real.
    pub fn check_invariants(&self) -> Result<()> {
        let d = self.dim;
        let gs: f64 = self.g.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let os: f64 = self.omega3.iter().flatten().flatten().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        for a in 0..d {
            for b in 0..d {
                if (self.g[a][b] - self.g[b][a]).norm() > 1e-10 * gs {
                    return Err(Error::ModelInconsistency(format!("metric not symmetric at ({a},{b})")));
                }
                for c in 0..d {
                    let v = self.omega3[a][b][c];
                    if (v + self.omega3[b][a][c]).norm() > 1e-10 * os
                        || (v - self.omega3[b][c][a]).norm() > 1e-10 * os
                    {
                        return Err(Error::ModelInconsistency(format!("3-form not antisymmetric at ({a},{b},{c})")));
                    }
                }
            }
        }
        let gr = DMatrix::from_fn(d, d, |a, b| self.g_real[a][b]);
        let sv = gr.singular_values();
        let (smin, smax) = (sv.min(), sv.max());
        if !(smin >= 1e-6 * smax) {
            return Err(Error::ModelInconsistency(format!("metric degenerate: singular values {smin:e} / {smax:e}")));
        }
        Ok(())
    }
}
