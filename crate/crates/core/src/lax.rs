//! Spectral-parameter connections built from the singular gauge
//! trivialisations α_a = ∂̄₁⁻¹A_a, β_a = ∂̄₂⁻¹A_a, the flatness residual, the
//! pairing identities against the equations of motion, and holonomy charges.
//!
//! Holonomies are taken in the meromorphic gauge
//!
//! ```text
//! L(z) = a(z) j₁ dt₁ + b(z) j₂ dt₂,  a = p1/(z−p1),  b = p2/(z−p2),
//! ```
//!
//! which is flat exactly on solutions and is related to the region-wise
//! gauge of (α, β) by a first-order gauge transformation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::{
    bracket_fields, bracket_form_field, dbar1_inv, dbar1_inv_field, dbar2_inv, dbar2_inv_field, pair, BoundaryField,
    ModelParams, Region,
};
use crate::dynamics::{Jet, LatticeField};
use crate::error::{Error, Result};
use crate::geometry::{BasisCache, GeometryTensors};
use crate::lie::{AlgElement, AlgebraData, GroupElement};
use crate::linalg::{self, Mat, C64};

#[derive(Debug, Clone)]
pub struct LaxSample {
    pub z: C64,
    pub region: Region,
    pub alpha_vals: Vec<AlgElement>,
    pub beta_vals: Vec<AlgElement>,
    /// `dalpha[a][b]` = ∂α_a/∂λ^b at the basepoint.
    pub dalpha: Vec<Vec<AlgElement>>,
    /// `dbeta[a][b]` = ∂β_a/∂λ^b at the basepoint.
    pub dbeta: Vec<Vec<AlgElement>>,
}

fn check_spectral_point(params: &ModelParams, z: C64) -> Result<()> {
    for (p, name) in [(C64::new(0.0, 0.0), "0"), (params.p1, "p1"), (params.p2, "p2")] {
        if (z - p).norm() < 1e-12 * (1.0 + p.norm()) {
            return Err(Error::Pole(format!("spectral point {z} coincides with excluded point {name}")));
        }
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Pole("spectral point at infinity".into()));
    }
    Ok(())
}

/// Connection coefficients and their basepoint derivatives at z.
pub fn lax_sample(params: &ModelParams, algebra: &AlgebraData, z: C64, n: usize) -> Result<LaxSample> {
    check_spectral_point(params, z)?;
    let gap = ((z - params.p1).norm() - params.eps).abs();
    if gap < params.eps / 8.0 {
        return Err(Error::IllConditioned(format!("spectral point {z} within eps/8 of the contour")));
    }
    let d = algebra.dim;
    let cache = BasisCache::new(params, algebra, n)?;
    let mut alpha_vals = Vec::with_capacity(d);
    let mut beta_vals = Vec::with_capacity(d);
    for a in 0..d {
        alpha_vals.push(dbar1_inv(params, algebra, &cache.a[a], z)?);
        beta_vals.push(dbar2_inv(params, algebra, &cache.a[a], z)?);
    }
    let mut dalpha = vec![vec![algebra.zero(); d]; d];
    let mut dbeta = vec![vec![algebra.zero(); d]; d];
    for a in 0..d {
        for b in 0..d {
            let f1 = bracket_form_field(algebra, &cache.a[b], &cache.inv1[a])?;
            dalpha[a][b] = -&dbar1_inv(params, algebra, &f1, z)?;
            let f2 = bracket_form_field(algebra, &cache.a[b], &cache.inv2[a])?;
            dbeta[a][b] = -&dbar2_inv(params, algebra, &f2, z)?;
        }
    }
    Ok(LaxSample { z, region: params.region(z), alpha_vals, beta_vals, dalpha, dbeta })
}

/// (β_a − α_a) ∂₁∂₂λ^a + (∂β_b/∂λ^a − ∂α_a/∂λ^b + [α_a, β_b]) ∂₁λ^a ∂₂λ^b.
pub fn flatness_residual(algebra: &AlgebraData, sample: &LaxSample, jet: &Jet) -> Result<AlgElement> {
    let d = algebra.dim;
    for x in [&jet.d1, &jet.d2, &jet.d12] {
        if x.dim() != d {
            return Err(Error::Shape { expected: d, got: x.dim() });
        }
    }
    let mut out = algebra.zero();
    for a in 0..d {
        let w = jet.d12.coeffs[a];
        if w != C64::new(0.0, 0.0) {
            out.axpy(w, &(&sample.beta_vals[a] - &sample.alpha_vals[a]));
        }
    }
    for a in 0..d {
        for b in 0..d {
            let w = jet.d1.coeffs[a] * jet.d2.coeffs[b];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            let mut coef = &sample.dbeta[b][a] - &sample.dalpha[a][b];
            coef = &coef + &algebra.bracket_unchecked(&sample.alpha_vals[a], &sample.beta_vals[b]);
            out.axpy(w, &coef);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockReport {
    pub name: String,
    pub max_abs_err: f64,
    /// max error divided by the block's reference scale.
    pub max_rel_err: f64,
    pub scale: f64,
    pub worst: [usize; 3],
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub tol: f64,
    pub blocks: Vec<BlockReport>,
    pub pass: bool,
}

struct BlockAcc {
    name: &'static str,
    max_err: f64,
    max_ref: f64,
    worst: [usize; 3],
}

impl BlockAcc {
    fn new(name: &'static str) -> Self {
        BlockAcc { name, max_err: 0.0, max_ref: 0.0, worst: [0; 3] }
    }

    fn push(&mut self, lhs: C64, rhs: C64, idx: [usize; 3]) {
        let e = (lhs - rhs).norm();
        self.max_ref = self.max_ref.max(lhs.norm()).max(rhs.norm());
        if e > self.max_err {
            self.max_err = e;
            self.worst = idx;
        }
    }

    fn finish(self, floor: f64, tol: f64) -> BlockReport {
        let scale = self.max_ref.max(floor);
        let rel = self.max_err / scale;
        BlockReport { name: self.name.into(), max_abs_err: self.max_err, max_rel_err: rel, scale, worst: self.worst, pass: rel <= tol }
    }
}

/// Pairs every flatness coefficient with A_c and compares with −½ times the
/// matching coefficient of the equations of motion:
///
/// * order 2:   ∫ω∧⟨β_a − α_a, A_c⟩ = −g_ac
/// * symmetric: ∫ω∧⟨¼(F_ab + F_ba), A_c⟩ = −¼ Γ_abc
/// * alternating: ∫ω∧⟨¼(F_ab − F_ba), A_c⟩ = ¼ Ω_abc
///
/// with F_ab = ∂β_b/∂λ^a − ∂α_a/∂λ^b + [α_a, β_b] as layered fields. The
/// derivative fields are computed here independently of `geometry.dg`.
pub fn verify_main_theorem_identities(
    params: &ModelParams,
    algebra: &AlgebraData,
    geometry: &GeometryTensors,
    n: usize,
    tol: f64,
) -> Result<IdentityReport> {
    let d = algebra.dim;
    if geometry.dim != d {
        return Err(Error::Shape { expected: d, got: geometry.dim });
    }
    let cache = BasisCache::new(params, algebra, n)?;
    let mut dalpha: Vec<Vec<BoundaryField>> = Vec::with_capacity(d);
    let mut dbeta: Vec<Vec<BoundaryField>> = Vec::with_capacity(d);
    for a in 0..d {
        let mut ra = Vec::with_capacity(d);
        let mut rb = Vec::with_capacity(d);
        for b in 0..d {
            let f1 = bracket_form_field(algebra, &cache.a[b], &cache.inv1[a])?;
            ra.push(dbar1_inv_field(params, algebra, &f1)?.scale(C64::new(-1.0, 0.0)));
            let f2 = bracket_form_field(algebra, &cache.a[b], &cache.inv2[a])?;
            rb.push(dbar2_inv_field(params, algebra, &f2)?.scale(C64::new(-1.0, 0.0)));
        }
        dalpha.push(ra);
        dbeta.push(rb);
    }
    let mut flat = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let br = bracket_fields(algebra, &cache.inv1[a], &cache.inv2[b])?;
            flat.push(dbeta[b][a].sub(&dalpha[a][b]).add(&br));
        }
    }
    let gscale = geometry.g.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let quarter = C64::new(0.25, 0.0);
    let mut o2 = BlockAcc::new("order2");
    let mut sym = BlockAcc::new("symmetric");
    let mut alt = BlockAcc::new("alternating");
    for a in 0..d {
        let diff = cache.inv2[a].sub(&cache.inv1[a]);
        for c in 0..d {
            o2.push(pair(params, algebra, &diff, &cache.a[c])?, -geometry.g[a][c], [a, c, 0]);
        }
        for b in 0..d {
            let s = flat[a * d + b].add(&flat[b * d + a]).scale(quarter);
            let t = flat[a * d + b].sub(&flat[b * d + a]).scale(quarter);
            for c in 0..d {
                let dg = &geometry.dg;
                let christoffel = dg[c][b][a] + dg[a][c][b] - dg[a][b][c];
                sym.push(pair(params, algebra, &s, &cache.a[c])?, -0.25 * christoffel, [a, b, c]);
                alt.push(pair(params, algebra, &t, &cache.a[c])?, 0.25 * geometry.omega3[a][b][c], [a, b, c]);
            }
        }
    }
    let blocks: Vec<BlockReport> = [o2, sym, alt].into_iter().map(|b| b.finish(gscale, tol)).collect();
    let pass = blocks.iter().all(|b| b.pass);
    Ok(IdentityReport { tol, blocks, pass })
}

/// The meromorphic gauge L(z) = a(z) j₁ dt₁ + b(z) j₂ dt₂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalLax {
    pub a: C64,
    pub b: C64,
}

impl GlobalLax {
    pub fn new(params: &ModelParams, z: C64) -> Result<Self> {
        check_spectral_point(params, z)?;
        Ok(GlobalLax { a: params.p1 / (z - params.p1), b: params.p2 / (z - params.p2) })
    }
}

#[derive(Debug, Clone)]
pub struct HolonomyRecord {
    pub z: C64,
    pub region: Region,
    pub t2_index: usize,
    pub hol: GroupElement,
    /// tr(hol^k), k = 1..K.
    pub charges: Vec<C64>,
}

/// Ordered product Π_i exp(−h₁ a(z) J₁(i)) around the row `t2_index`
/// (transport for ∂ + L, later sites to the left).
pub fn holonomy(
    field: &LatticeField,
    t2_index: usize,
    params: &ModelParams,
    algebra: &AlgebraData,
    z: C64,
    k_max: usize,
) -> Result<HolonomyRecord> {
    let lax = GlobalLax::new(params, z)?;
    let row = field
        .j1
        .get(t2_index)
        .ok_or(Error::Shape { expected: field.rows(), got: t2_index })?;
    let s = -lax.a * field.h1;
    let mut hol = linalg::identity(algebra.n);
    for j in row {
        hol = linalg::expm(&(algebra.to_matrix(j) * s)) * hol;
    }
    let charges = trace_powers(&hol, k_max);
    Ok(HolonomyRecord { z, region: params.region(z), t2_index, hol: GroupElement { mat: hol }, charges })
}

fn trace_powers(m: &Mat, k_max: usize) -> Vec<C64> {
    let mut p = m.clone();
    let mut out = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        out.push(p.trace());
        p = &p * m;
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChargeRow {
    pub z: C64,
    pub k: usize,
    pub t2_index: usize,
    pub value: C64,
    /// |Q(t₂) − Q(0)| / max(|Q(0)|, 1).
    pub drift: f64,
}

/// tr(Hol(z)^k) on every row, for every z in the grid and k = 1..K.
pub fn charge_scan(field: &LatticeField, params: &ModelParams, algebra: &AlgebraData, zs: &[C64], k_max: usize) -> Result<Vec<ChargeRow>> {
    let mut out = Vec::new();
    for &z in zs {
        let recs: Vec<HolonomyRecord> =
            (0..field.rows()).map(|n| holonomy(field, n, params, algebra, z, k_max)).collect::<Result<_>>()?;
        for k in 0..k_max {
            let q0 = recs[0].charges[k];
            for r in &recs {
                out.push(ChargeRow {
                    z,
                    k: k + 1,
                    t2_index: r.t2_index,
                    value: r.charges[k],
                    drift: (r.charges[k] - q0).norm() / q0.norm().max(1.0),
                });
            }
        }
    }
    Ok(out)
}

/// Largest drift per (z, k) over the whole scan.
pub fn max_drift(rows: &[ChargeRow], z: C64, k: usize) -> f64 {
    rows.iter().filter(|r| r.z == z && r.k == k).map(|r| r.drift).fold(0.0, f64::max)
}

/// Largest |flatness residual| over the lattice and a set of samples.
pub fn max_flatness_residual(
    algebra: &AlgebraData,
    field: &LatticeField,
    samples: &[LaxSample],
    perturb: Option<&AlgElement>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 0..field.rows().saturating_sub(1) {
        for i in 0..field.n1 {
            let mut jet = field.plaquette_jet(algebra, i, n);
            if let Some(p) = perturb {
                jet.d12 = &jet.d12 + p;
            }
            for s in samples {
                worst = worst.max(flatness_residual(algebra, s, &jet)?.norm());
            }
        }
    }
    Ok(worst)
}

/// Twelve spectral points, six on a circle of radius ε/2 inside the contour
/// and six on a circle of radius |p1|/2 around the origin, outside it.
pub fn default_z_grid(params: &ModelParams) -> Vec<C64> {
    let mut out = Vec::with_capacity(12);
    for k in 0..6 {
        let e = C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.25) / 6.0);
        out.push(params.p1 + 0.5 * params.eps * e);
    }
    let r = 0.5 * params.p1.norm().min(params.p2.norm());
    for k in 0..6 {
        let e = C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / 6.0);
        out.push(r * e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{derive_eom_coefficients, solve, EomCoefficients, InitialData, LatticeSpec, SolverOptions};
    use crate::geometry::geometry_tensors;
    use crate::lie::make_algebra;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(p1: C64, p2: C64) -> ModelParams {
        ModelParams::new(p1, p2, ModelParams::default_eps(p1, p2)).unwrap()
    }

    #[test]
    fn sample_closed_forms() {
        let p = params(c(1.0, 0.0), c(-1.0, 0.0));
        let g = make_algebra("su(2)", 2).unwrap();
        let zin = p.p1 + c(0.3 * p.eps, 0.2 * p.eps);
        let s = lax_sample(&p, &g, zin, 256).unwrap();
        assert_eq!(s.region, Region::Inside);
        let f = 2.0 * zin / ((zin - 1.0) * (zin + 1.0));
        for a in 0..3 {
            assert!((&s.alpha_vals[a] - &g.basis_element(a).scale(f)).norm() < 1e-8 * f.norm());
            assert!(s.beta_vals[a].norm() < 1e-8 * f.norm());
        }
        let zout = c(0.2, 0.7);
        let s = lax_sample(&p, &g, zout, 256).unwrap();
        let f = p.f(zout);
        for a in 0..3 {
            assert!((&s.beta_vals[a] + &g.basis_element(a).scale(f)).norm() < 1e-8 * f.norm());
            assert!(s.alpha_vals[a].norm() < 1e-8 * f.norm());
        }
        assert!(lax_sample(&p, &g, c(0.0, 0.0), 64).is_err());
        assert!(matches!(lax_sample(&p, &g, p.p1 + c(p.eps * 1.01, 0.0), 64), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn derivative_coefficients_match_meromorphic_gauge() {
        // ∂α_a/∂λ^b = κα [t_a,t_b] with −κα = u/2 + ηu − η²/2, and
        // ∂β_a/∂λ^b = κβ [t_b,t_a] with κβ = v/2 + ηv − η²/2, where u = a(z),
        // v = b(z) and η = b(z) inside, a(z) outside.
        let p = params(c(2.0, 0.0), c(1.0, 0.3));
        let g = make_algebra("su(2)", 2).unwrap();
        for z in default_z_grid(&p) {
            let s = lax_sample(&p, &g, z, 256).unwrap();
            let lax = GlobalLax::new(&p, z).unwrap();
            let (u, v) = (lax.a, lax.b);
            let eta = if p.region(z) == Region::Inside { v } else { u };
            let ka = -(u / 2.0 + eta * u - eta * eta / 2.0);
            let kb = v / 2.0 + eta * v - eta * eta / 2.0;
            for a in 0..3 {
                for b in 0..3 {
                    let br = g.bracket(&g.basis_element(a), &g.basis_element(b)).unwrap();
                    assert!((&s.dalpha[a][b] - &br.scale(ka)).norm() < 1e-9, "z={z}");
                    assert!((&s.dbeta[a][b] + &br.scale(kb)).norm() < 1e-9, "z={z}");
                }
                let t = g.basis_element(a);
                assert!((&s.alpha_vals[a] - &t.scale(u - eta)).norm() < 1e-9);
                assert!((&s.beta_vals[a] - &t.scale(v - eta)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn abelian_derivatives_vanish() {
        let p = params(c(2.0, 0.0), c(1.0, 0.0));
        let g = make_algebra("abelian", 2).unwrap();
        let s = lax_sample(&p, &g, c(0.5, 0.5), 64).unwrap();
        assert!(s.dalpha.iter().flatten().chain(s.dbeta.iter().flatten()).all(|x| x.norm() == 0.0));
    }

    #[test]
    fn flatness_residual_basics() {
        let p = params(c(2.0, 0.0), c(1.0, 0.0));
        let g = make_algebra("su(2)", 2).unwrap();
        let s = lax_sample(&p, &g, p.p1 + c(0.1 * p.eps, 0.0), 128).unwrap();
        assert_eq!(flatness_residual(&g, &s, &Jet::zero(3)).unwrap().norm(), 0.0);
        let mut jet = Jet::zero(3);
        jet.d12 = g.basis_element(2);
        let r = flatness_residual(&g, &s, &jet).unwrap();
        assert!((&r - &(&s.beta_vals[2] - &s.alpha_vals[2])).norm() < 1e-15);
    }

    #[test]
    fn flatness_is_proportional_to_equations_of_motion() {
        let p = params(c(2.0, 0.0), c(1.0, 0.0));
        let g = make_algebra("su(2)", 2).unwrap();
        let t = geometry_tensors(&p, &g, 128).unwrap();
        let k = derive_eom_coefficients(&p, &g, &t).unwrap();
        let jet = Jet {
            d1: AlgElement::from_real(&[0.3, -0.5, 0.2]),
            d2: AlgElement::from_real(&[-0.1, 0.4, 0.9]),
            d12: AlgElement::from_real(&[0.7, 0.1, -0.3]),
        };
        let eom = k.group_residual(&g, &jet);
        for z in default_z_grid(&p) {
            let s = lax_sample(&p, &g, z, 128).unwrap();
            let r = flatness_residual(&g, &s, &jet).unwrap();
            let want = eom.scale(-p.f(z) / (2.0 * k.rho));
            assert!((&r - &want).norm() < 1e-9 * want.norm(), "z={z}");
        }
    }

    #[test]
    fn identities_hold() {
        for (p1, p2) in [(c(2.0, 0.0), c(1.0, 0.0)), (c(1.0, 0.0), c(-1.0, 0.0)), (c(1.0, 1.0), c(2.0, 0.0))] {
            let p = params(p1, p2);
            let g = make_algebra("su(2)", 2).unwrap();
            let t = geometry_tensors(&p, &g, 128).unwrap();
            let rep = verify_main_theorem_identities(&p, &g, &t, 128, 1e-6).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    fn solved(n: usize) -> (AlgebraData, ModelParams, LatticeField) {
        let g = make_algebra("su(2)", 2).unwrap();
        let p = params(c(2.0, 0.0), c(1.0, 0.0));
        let k = EomCoefficients { rho: p.metric_scale(), gamma: 3.0 * p.metric_scale() };
        let s = LatticeSpec { n1: n, n2: n, l1: 1.0, l2: 1.0 };
        let data = InitialData::random_fourier(&s, &g, 3, 0.3, 0.39, 11).unwrap();
        let f = solve(&g, &s, &data, &k, &SolverOptions::default()).unwrap();
        (g, p, f)
    }

    #[test]
    fn constant_field_has_trivial_holonomy() {
        let g = make_algebra("su(2)", 2).unwrap();
        let p = params(c(2.0, 0.0), c(1.0, 0.0));
        let s = LatticeSpec { n1: 8, n2: 8, l1: 1.0, l2: 1.0 };
        let data = InitialData::constant(&s, &g, &GroupElement::identity(2));
        let k = EomCoefficients { rho: c(1.0, 0.0), gamma: c(3.0, 0.0) };
        let f = solve(&g, &s, &data, &k, &SolverOptions::default()).unwrap();
        let h = holonomy(&f, 3, &p, &g, c(0.5, 0.5), 2).unwrap();
        assert!((h.charges[0] - c(2.0, 0.0)).norm() < 1e-14);
        let rows = charge_scan(&f, &p, &g, &[c(0.5, 0.5)], 1).unwrap();
        assert!(rows.iter().all(|r| r.drift == 0.0));
    }

    #[test]
    fn charges_are_conserved_and_conjugation_invariant() {
        let (g, p, f16) = solved(64);
        let (_, _, f32) = solved(128);
        let zs = default_z_grid(&p);
        let d16 = charge_scan(&f16, &p, &g, &zs, 1).unwrap();
        let d32 = charge_scan(&f32, &p, &g, &zs, 1).unwrap();
        for &z in &zs {
            let (a, b) = (max_drift(&d16, z, 1), max_drift(&d32, z, 1));
            assert!(a / b > 3.0, "z={z}: {a:e} {b:e}");
        }
        // conjugating the row currents by a constant element leaves traces fixed
        let h = g.group_exp(&AlgElement::from_real(&[0.3, -1.2, 0.5])).unwrap();
        let mut moved = f16.clone();
        for row in moved.j1.iter_mut() {
            for j in row.iter_mut() {
                *j = g.adjoint(&h, j).unwrap();
            }
        }
        let a = holonomy(&f16, 5, &p, &g, zs[2], 2).unwrap();
        let b = holonomy(&moved, 5, &p, &g, zs[2], 2).unwrap();
        for k in 0..2 {
            assert!((a.charges[k] - b.charges[k]).norm() < 1e-10 * a.charges[k].norm().max(1.0), "{:?} {:?}", a.charges, b.charges);
        }
        let outer = holonomy(&f16, 5, &p, &g, zs[8], 1).unwrap();
        assert!((outer.hol.mat.determinant() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn flatness_converges_on_solutions() {
        let (g, p, f16) = solved(16);
        let (_, _, f32) = solved(32);
        let samples: Vec<LaxSample> = default_z_grid(&p).into_iter().map(|z| lax_sample(&p, &g, z, 128).unwrap()).collect();
        let r16 = max_flatness_residual(&g, &f16, &samples, None).unwrap();
        let r32 = max_flatness_residual(&g, &f32, &samples, None).unwrap();
        assert!(r16 / r32 > 3.0, "{r16:e} {r32:e}");
    }

    #[test]
    fn charges_at_distinct_points_are_distinct() {
        let g = make_algebra("su(2)", 2).unwrap();
        let p = params(c(2.0, 0.0), c(1.0, 0.0));
        let k = EomCoefficients { rho: p.metric_scale(), gamma: 3.0 * p.metric_scale() };
        let s = LatticeSpec { n1: 16, n2: 16, l1: 1.0, l2: 1.0 };
        let zs = default_z_grid(&p);
        for seed in 0..5 {
            let data = InitialData::random_fourier(&s, &g, 2, 0.4, 0.5, seed).unwrap();
            let f = solve(&g, &s, &data, &k, &SolverOptions::default()).unwrap();
            for (z1, z2) in [(zs[0], zs[3]), (zs[6], zs[9])] {
                let q1 = holonomy(&f, 8, &p, &g, z1, 1).unwrap().charges[0];
                let q2 = holonomy(&f, 8, &p, &g, z2, 1).unwrap().charges[0];
                assert!((q1 - q2).norm() > 1e-4, "seed {seed}: {q1} {q2}");
            }
        }
    }
}
