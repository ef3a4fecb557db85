//! Light-cone lattice fields σ: S¹ × [0, L₂] → G and a characteristic
//! integrator for the group-level equations of motion
//!
//! ```text
//! ρ (∂₁j₂ + ∂₂j₁) − γ [j₁, j₂] = 0,   j_α = (∂_α σ) σ⁻¹,
//! ```
//!
//! whose coefficients are fitted against the coordinate form of the equations
//! built from the metric, its derivative and the 3-form.
//!
//! Group elements live on sites (i, n). Row links satisfy σ(i+1,n) =
//! U₁(i,n) σ(i,n) with U₁ = exp(h₁ J₁), column links σ(i,n+1) = U₂(i,n) σ(i,n)
//! with U₂ = exp(h₂ J₂). The update U₁(i,n+1) = U₂(i+1,n) U₁(i,n) U₂(i,n)⁻¹
//! is an exact discrete zero-curvature condition, so periodicity in t₁ is
//! preserved identically.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::ModelParams;
use crate::error::{Error, Result};
use crate::geometry::GeometryTensors;
use crate::lie::{AlgElement, AlgebraData, GroupElement};
use crate::linalg::{self, Mat, C64};

/// Second-order jet of a field in exponential coordinates centred at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    /// ∂λ/∂t₁
    pub d1: AlgElement,
    /// ∂λ/∂t₂
    pub d2: AlgElement,
    /// ∂²λ/∂t₁∂t₂
    pub d12: AlgElement,
}

impl Jet {
    pub fn zero(dim: usize) -> Self {
        Jet { d1: AlgElement::zero(dim), d2: AlgElement::zero(dim), d12: AlgElement::zero(dim) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EomCoefficients {
    pub rho: C64,
    pub gamma: C64,
}

impl EomCoefficients {
    pub fn ratio(&self) -> C64 {
        self.gamma / self.rho
    }

    /// ∂₁j₂ = c₊ [j₁, j₂].
    pub fn c_plus(&self) -> C64 {
        (self.ratio() + 1.0) / 2.0
    }

    /// ∂₂j₁ = c₋ [j₁, j₂].
    pub fn c_minus(&self) -> C64 {
        (self.ratio() - 1.0) / 2.0
    }

    /// ρ S − γ [j₁, j₂] with S = ∂₁j₂ + ∂₂j₁ = 2 ∂₁∂₂λ at the centre.
    pub fn group_residual(&self, algebra: &AlgebraData, jet: &Jet) -> AlgElement {
        let br = algebra.bracket_unchecked(&jet.d1, &jet.d2);
        let mut out = jet.d12.scale(2.0 * self.rho);
        out.axpy(-self.gamma, &br);
        out
    }

    /// The group residual with its index lowered by κ.
    pub fn lowered_residual(&self, algebra: &AlgebraData, jet: &Jet) -> Vec<C64> {
        let r = self.group_residual(algebra, jet);
        (0..algebra.dim)
            .map(|c| (0..algebra.dim).map(|d| algebra.kappa[(c, d)] * r.coeffs[d]).sum())
            .collect()
    }
}

fn check_jet(algebra: &AlgebraData, jet: &Jet) -> Result<()> {
    for x in [&jet.d1, &jet.d2, &jet.d12] {
        if x.dim() != algebra.dim {
            return Err(Error::Shape { expected: algebra.dim, got: x.dim() });
        }
    }
    Ok(())
}

/// E_c = 2 g_ac ∂₁∂₂λ^a + ½ Γ_abc (∂₁λ^a ∂₂λ^b + ∂₂λ^a ∂₁λ^b)
///       − ½ Ω_abc (∂₁λ^a ∂₂λ^b − ∂₂λ^a ∂₁λ^b),
/// with Γ_abc = ∂_a g_cb + ∂_b g_ac − ∂_c g_ab.
pub fn coordinate_eom_residual(
    _params: &ModelParams,
    algebra: &AlgebraData,
    geometry: &GeometryTensors,
    jet: &Jet,
) -> Result<Vec<C64>> {
    check_jet(algebra, jet)?;
    if geometry.dim != algebra.dim {
        return Err(Error::Shape { expected: algebra.dim, got: geometry.dim });
    }
    let d = algebra.dim;
    let (x1, x2, x12) = (&jet.d1.coeffs, &jet.d2.coeffs, &jet.d12.coeffs);
    let dg = &geometry.dg;
    let mut out = vec![C64::new(0.0, 0.0); d];
    for (c, o) in out.iter_mut().enumerate() {
        let mut s = C64::new(0.0, 0.0);
        for a in 0..d {
            s += 2.0 * geometry.g[a][c] * x12[a];
            for b in 0..d {
                let gamma = dg[c][b][a] + dg[a][c][b] - dg[a][b][c];
                let sym = x1[a] * x2[b] + x2[a] * x1[b];
                let alt = x1[a] * x2[b] - x2[a] * x1[b];
                s += 0.5 * gamma * sym - 0.5 * geometry.omega3[a][b][c] * alt;
            }
        }
        *o = s;
    }
    Ok(out)
}

/// Reads ρ off a pure second-derivative jet and γ off a pure
/// first-derivative jet, then validates the fit on random jets.
pub fn derive_eom_coefficients(
    params: &ModelParams,
    algebra: &AlgebraData,
    geometry: &GeometryTensors,
) -> Result<EomCoefficients> {
    let d = algebra.dim;
    let argmax = |v: &[C64]| {
        v.iter().enumerate().fold((0usize, 0.0f64), |acc, (i, x)| if x.norm() > acc.1 { (i, x.norm()) } else { acc }).0
    };
    let mut jet = Jet::zero(d);
    jet.d12 = algebra.basis_element(0);
    let e = coordinate_eom_residual(params, algebra, geometry, &jet)?;
    let kcol: Vec<C64> = (0..d).map(|c| 2.0 * algebra.kappa[(c, 0)]).collect();
    let c0 = argmax(&kcol);
    let rho = e[c0] / kcol[c0];
    if !(rho.norm() > 0.0) || !rho.re.is_finite() {
        return Err(Error::ModelInconsistency("metric coefficient rho vanishes".into()));
    }
    let mut gamma = C64::new(0.0, 0.0);
    'outer: for a in 0..d {
        for b in 0..d {
            let br = algebra.bracket_unchecked(&algebra.basis_element(a), &algebra.basis_element(b));
            if br.norm() < 1e-12 {
                continue;
            }
            let lowered: Vec<C64> =
                (0..d).map(|c| (0..d).map(|k| algebra.kappa[(c, k)] * br.coeffs[k]).sum()).collect();
            let mut jet = Jet::zero(d);
            jet.d1 = algebra.basis_element(a);
            jet.d2 = algebra.basis_element(b);
            let e = coordinate_eom_residual(params, algebra, geometry, &jet)?;
            let c0 = argmax(&lowered);
            gamma = -e[c0] / lowered[c0];
            break 'outer;
        }
    }
    let coeffs = EomCoefficients { rho, gamma };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..8 {
        let mut rnd = || AlgElement::from_real(&(0..d).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
        let jet = Jet { d1: rnd(), d2: rnd(), d12: rnd() };
        let lhs = coordinate_eom_residual(params, algebra, geometry, &jet)?;
        let rhs = coeffs.lowered_residual(algebra, &jet);
        let scale = lhs.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if err > 1e-6 * scale {
            return Err(Error::ModelInconsistency(format!(
                "group-level equations do not reproduce the coordinate equations: relative misfit {:e}",
                err / scale
            )));
        }
    }
    Ok(coeffs)
}

/// Lattice extents: `n1` periodic sites over length `l1`, `n2` rows with
/// spacing `l2 / n2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
}

impl LatticeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n1 < 8 || self.n2 < 8 {
            return Err(Error::Config(format!("lattice must be at least 8x8, got {}x{}", self.n1, self.n2)));
        }
        if !(self.l1 > 0.0 && self.l2 > 0.0 && self.l1.is_finite() && self.l2.is_finite()) {
            return Err(Error::Config("lattice lengths must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn h1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        self.l2 / self.n2 as f64
    }
}

/// Goursat data: σ on the row t₂ = 0, and j₂ along the column t₁ = 0 at the
/// half-integer rows (only its component commuting with the row transport is
/// used).
#[derive(Debug, Clone)]
pub struct InitialData {
    pub sigma0: Vec<GroupElement>,
    pub j2_left: Vec<AlgElement>,
}

fn rand_elem(rng: &mut ChaCha8Rng, dim: usize, amp: f64) -> AlgElement {
    AlgElement::from_real(&(0..dim).map(|_| amp * rng.gen_range(-1.0..1.0)).collect::<Vec<_>>())
}

impl InitialData {
    /// σ ≡ g and j₂ ≡ 0.
    pub fn constant(spec: &LatticeSpec, algebra: &AlgebraData, g: &GroupElement) -> Self {
        InitialData { sigma0: vec![g.clone(); spec.n1], j2_left: vec![algebra.zero(); spec.n2] }
    }

    /// σ(t₁, 0) = exp X(t₁) with X a random trigonometric polynomial of the
    /// given number of modes (mode k scaled by 1/k), and a smooth random
    /// j₂(0, t₂). The draw depends only on the seed, not on the lattice size.
    pub fn random_fourier(
        spec: &LatticeSpec,
        algebra: &AlgebraData,
        modes: usize,
        amplitude: f64,
        j2_amplitude: f64,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        let d = algebra.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cos: Vec<AlgElement> = (0..modes).map(|_| rand_elem(&mut rng, d, amplitude)).collect();
        let sin: Vec<AlgElement> = (0..modes).map(|_| rand_elem(&mut rng, d, amplitude)).collect();
        let y0 = rand_elem(&mut rng, d, j2_amplitude);
        let y1 = rand_elem(&mut rng, d, j2_amplitude);
        let mut sigma0 = Vec::with_capacity(spec.n1);
        for i in 0..spec.n1 {
            let t = i as f64 * spec.h1();
            let mut x = algebra.zero();
            for k in 0..modes {
                let w = 2.0 * PI * (k + 1) as f64 * t / spec.l1;
                let s = 1.0 / (k + 1) as f64;
                x.axpy(C64::new(s * w.cos(), 0.0), &cos[k]);
                x.axpy(C64::new(s * w.sin(), 0.0), &sin[k]);
            }
            sigma0.push(algebra.group_exp(&x)?);
        }
        let j2_left = (0..spec.n2)
            .map(|n| {
                let t = (n as f64 + 0.5) * spec.h2();
                let mut y = y0.clone();
                y.axpy(C64::new((2.0 * PI * t / spec.l2).sin(), 0.0), &y1);
                y
            })
            .collect();
        Ok(InitialData { sigma0, j2_left })
    }

    /// Builds σ on the first row from edge currents J₁ by ordered
    /// exponentials, starting at the identity. The product around the circle
    /// must close.
    pub fn from_currents(
        spec: &LatticeSpec,
        algebra: &AlgebraData,
        j1_row: &[AlgElement],
        j2_left: Vec<AlgElement>,
    ) -> Result<Self> {
        spec.validate()?;
        if j1_row.len() != spec.n1 {
            return Err(Error::Shape { expected: spec.n1, got: j1_row.len() });
        }
        if j2_left.len() != spec.n2 {
            return Err(Error::Shape { expected: spec.n2, got: j2_left.len() });
        }
        let mut g = GroupElement::identity(algebra.n);
        let mut sigma0 = Vec::with_capacity(spec.n1);
        for j in j1_row {
            sigma0.push(g.clone());
            g = algebra.group_exp(&j.scale(C64::new(spec.h1(), 0.0)))?.compose(&g);
        }
        let gap = linalg::fnorm(&(&g.mat - linalg::identity(algebra.n)));
        if gap > 1e-8 {
            return Err(Error::Config(format!("current row is not periodic: loop product differs from 1 by {gap:e}")));
        }
        Ok(InitialData { sigma0, j2_left })
    }

    /// Left translation of the data by g: σ ↦ gσ, j ↦ Ad_g j.
    pub fn left_translate(&self, algebra: &AlgebraData, g: &GroupElement) -> Result<Self> {
        Ok(InitialData {
            sigma0: self.sigma0.iter().map(|s| g.compose(s)).collect(),
            j2_left: self.j2_left.iter().map(|y| algebra.adjoint(g, y)).collect::<Result<_>>()?,
        })
    }
}

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Abort when any current exceeds this norm.
    pub blowup_bound: f64,
    /// Predictor-corrector tolerance on J₁.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { blowup_bound: 1e6, tol: 1e-14, max_iter: 60 }
    }
}

/// A (partial) trajectory. Row `n` holds σ(·, n) and the row currents
/// J₁(i + ½, n); `j2[n][i]` is J₂(i, n + ½) between rows n and n+1.
#[derive(Debug, Clone)]
pub struct LatticeField {
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub sigma: Vec<Vec<GroupElement>>,
    pub j1: Vec<Vec<AlgElement>>,
    pub j2: Vec<Vec<AlgElement>>,
    u1_last: Vec<Mat>,
}

impl LatticeField {
    /// Row 0 from the initial σ, which must be unitary.
    pub fn new(algebra: &AlgebraData, spec: &LatticeSpec, sigma0: &[GroupElement]) -> Result<Self> {
        spec.validate()?;
        if sigma0.len() != spec.n1 {
            return Err(Error::Shape { expected: spec.n1, got: sigma0.len() });
        }
        let h1 = spec.h1();
        let mut u1 = Vec::with_capacity(spec.n1);
        let mut j1 = Vec::with_capacity(spec.n1);
        let mut row = Vec::with_capacity(spec.n1);
        for s in sigma0 {
            row.push(algebra.reproject(&s.mat)?);
        }
        for i in 0..spec.n1 {
            let next = &row[(i + 1) % spec.n1];
            let u = &next.mat * row[i].mat.adjoint();
            let l = linalg::logm(&u)?;
            j1.push(algebra.decompose(&(l * C64::new(1.0 / h1, 0.0))));
            u1.push(u);
        }
        Ok(LatticeField {
            n1: spec.n1,
            n2: spec.n2,
            h1,
            h2: spec.h2(),
            sigma: vec![row],
            j1: vec![j1],
            j2: Vec::new(),
            u1_last: u1,
        })
    }

    pub fn rows(&self) -> usize {
        self.sigma.len()
    }

    fn advance(&mut self, algebra: &AlgebraData, coeffs: &EomCoefficients, y: &AlgElement, opts: &SolverOptions) -> Result<()> {
        let cp = real_coefficient(coeffs.c_plus())?;
        let n1 = self.n1;
        let (h1, h2) = (self.h1, self.h2);
        let last = self.j1.len() - 1;
        let j1n: Vec<Mat> = self.j1[last].iter().map(|x| algebra.to_matrix(x)).collect();
        let ym = algebra.to_matrix(y);
        // J1 = log(U1)/h1 carries rounding noise of order eps/h1
        let jscale = j1n.iter().map(linalg::fnorm).fold(1.0, f64::max) * (1.0 / h1).max(1.0);
        let mut avg = j1n.clone();
        let mut j2m = vec![Mat::zeros(algebra.n, algebra.n); n1];
        let mut u1new = self.u1_last.clone();
        let mut j1new = j1n.clone();
        let mut converged = false;
        for _ in 0..opts.max_iter {
            let g: Vec<Mat> = avg.iter().map(|a| linalg::expm(&(a * C64::new(h1 * cp, 0.0)))).collect();
            let mut hol = linalg::identity(algebra.n);
            for gi in &g {
                hol = gi * hol;
            }
            j2m[0] = linalg::project_commutant(&hol, &ym, 1e-9);
            for i in 0..n1 - 1 {
                j2m[i + 1] = &g[i] * &j2m[i] * g[i].adjoint();
            }
            let u2: Vec<Mat> = j2m.iter().map(|j| linalg::expm(&(j * C64::new(h2, 0.0)))).collect();
            let mut delta = 0.0f64;
            for i in 0..n1 {
                u1new[i] = &u2[(i + 1) % n1] * &self.u1_last[i] * u2[i].adjoint();
                j1new[i] = linalg::logm(&u1new[i])? * C64::new(1.0 / h1, 0.0);
                let a = (&j1n[i] + &j1new[i]) * C64::new(0.5, 0.0);
                delta = delta.max(linalg::fnorm(&(&a - &avg[i])));
                avg[i] = a;
            }
            if delta <= opts.tol * jscale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical("row update did not converge".into()));
        }
        let j2row: Vec<AlgElement> = j2m.iter().map(|m| algebra.decompose(m)).collect();
        let j1row: Vec<AlgElement> = j1new.iter().map(|m| algebra.decompose(m)).collect();
        let worst = j1row.iter().chain(&j2row).map(|x| x.norm()).fold(0.0, f64::max);
        if !(worst <= opts.blowup_bound) {
            return Err(Error::BlowUp(format!("current norm {worst:e} exceeds bound {:e} at row {}", opts.blowup_bound, last + 1)));
        }
        let prev = &self.sigma[last];
        let mut row = Vec::with_capacity(n1);
        for (i, s) in prev.iter().enumerate() {
            let u2 = linalg::expm(&(&j2m[i] * C64::new(h2, 0.0)));
            row.push(algebra.reproject(&(u2 * &s.mat))?);
        }
        self.sigma.push(row);
        self.j1.push(j1row);
        self.j2.push(j2row);
        self.u1_last = u1new;
        Ok(())
    }

    /// Centred jet at the plaquette (i + ½, n + ½).
    pub fn plaquette_jet(&self, algebra: &AlgebraData, i: usize, n: usize) -> Jet {
        let ip = (i + 1) % self.n1;
        let half = C64::new(0.5, 0.0);
        let j1c = (&self.j1[n][i] + &self.j1[n + 1][i]).scale(half);
        let j2c = (&self.j2[n][i] + &self.j2[n][ip]).scale(half);
        let d1j2 = (&self.j2[n][ip] - &self.j2[n][i]).scale(C64::new(1.0 / self.h1, 0.0));
        let d2j1 = (&self.j1[n + 1][i] - &self.j1[n][i]).scale(C64::new(1.0 / self.h2, 0.0));
        let _ = algebra;
        Jet { d1: j1c, d2: j2c, d12: (&d1j2 + &d2j1).scale(half) }
    }

    fn plaquettes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let rows = self.rows().saturating_sub(1);
        (0..rows).flat_map(move |n| (0..self.n1).map(move |i| (i, n)))
    }

    /// max over plaquettes of |ρ(∂₁j₂ + ∂₂j₁) − γ[j₁, j₂]|.
    pub fn max_eom_residual(&self, algebra: &AlgebraData, coeffs: &EomCoefficients) -> f64 {
        self.plaquettes()
            .map(|(i, n)| coeffs.group_residual(algebra, &self.plaquette_jet(algebra, i, n)).norm())
            .fold(0.0, f64::max)
    }

    /// max over plaquettes of |∂₁j₂ − ∂₂j₁ − [j₁, j₂]| (right currents).
    pub fn max_maurer_cartan_residual(&self, algebra: &AlgebraData) -> f64 {
        self.plaquettes()
            .map(|(i, n)| {
                let ip = (i + 1) % self.n1;
                let jet = self.plaquette_jet(algebra, i, n);
                let d1j2 = (&self.j2[n][ip] - &self.j2[n][i]).scale(C64::new(1.0 / self.h1, 0.0));
                let d2j1 = (&self.j1[n + 1][i] - &self.j1[n][i]).scale(C64::new(1.0 / self.h2, 0.0));
                let br = algebra.bracket_unchecked(&jet.d1, &jet.d2);
                (&(&d1j2 - &d2j1) - &br).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Per-row Σ_i h₁⟨J₁, J₁⟩ (conserved for every ratio γ/ρ) and
    /// Σ_i h₁⟨J₁, J₂⟩ (half-row averaged; not conserved in general).
    pub fn current_diagnostics(&self, algebra: &AlgebraData) -> (Vec<C64>, Vec<C64>) {
        let h = C64::new(self.h1, 0.0);
        let j11 = self.j1.iter().map(|row| row.iter().map(|x| algebra.pairing_unchecked(x, x) * h).sum()).collect();
        let j12 = (0..self.j2.len())
            .map(|n| {
                (0..self.n1)
                    .map(|i| {
                        let jet = self.plaquette_jet(algebra, i, n);
                        algebra.pairing_unchecked(&jet.d1, &jet.d2) * h
                    })
                    .sum()
            })
            .collect();
        (j11, j12)
    }

    /// max over sites of ‖σσ† − 1‖.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.sigma.iter().flatten().map(|s| s.unitarity_defect()).fold(0.0, f64::max)
    }
}

fn real_coefficient(c: C64) -> Result<f64> {
    if c.im.abs() > 1e-10 * (1.0 + c.re.abs()) {
        return Err(Error::Config(format!(
            "lattice evolution needs a real ratio gamma/rho (real slice); got transport coefficient {c}"
        )));
    }
    Ok(c.re)
}

/// Advances a copy of `field` by one row with column datum `j2_left`.
pub fn step(
    algebra: &AlgebraData,
    field: &LatticeField,
    coeffs: &EomCoefficients,
    j2_left: &AlgElement,
) -> Result<LatticeField> {
    let mut out = field.clone();
    out.advance(algebra, coeffs, j2_left, &SolverOptions::default())?;
    Ok(out)
}

/// Integrates all `spec.n2` rows.
pub fn solve(
    algebra: &AlgebraData,
    spec: &LatticeSpec,
    initial: &InitialData,
    coeffs: &EomCoefficients,
    opts: &SolverOptions,
) -> Result<LatticeField> {
    if initial.j2_left.len() + 1 < spec.n2 {
        return Err(Error::Shape { expected: spec.n2, got: initial.j2_left.len() });
    }
    real_coefficient(coeffs.c_plus())?;
    let mut field = LatticeField::new(algebra, spec, &initial.sigma0)?;
    for n in 0..spec.n2 - 1 {
        field.advance(algebra, coeffs, &initial.j2_left[n], opts)?;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geometry_tensors;
    use crate::lie::make_algebra;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(p1: f64, p2: f64) -> ModelParams {
        let (a, b) = (c(p1, 0.0), c(p2, 0.0));
        ModelParams::new(a, b, ModelParams::default_eps(a, b)).unwrap()
    }

    fn coeffs_for(p: &ModelParams, g: &AlgebraData) -> EomCoefficients {
        let t = geometry_tensors(p, g, 128).unwrap();
        derive_eom_coefficients(p, g, &t).unwrap()
    }

    #[test]
    fn fitted_coefficients() {
        let g = make_algebra("su(2)", 2).unwrap();
        let p = params(1.0, -1.0);
        let k = coeffs_for(&p, &g);
        assert!(k.gamma.norm() < 1e-10);
        assert!((k.rho - p.metric_scale()).norm() < 1e-10);
        let q = params(2.0, 1.0);
        let k = coeffs_for(&q, &g);
        // regression constant
        assert!((k.ratio() - c(3.0, 0.0)).norm() < 1e-10);
        let ab = make_algebra("abelian", 2).unwrap();
        let k = coeffs_for(&q, &ab);
        assert_eq!(k.gamma, c(0.0, 0.0));
    }

    #[test]
    fn coordinate_residual_basics() {
        let g = make_algebra("su(2)", 2).unwrap();
        let p = params(2.0, 1.0);
        let t = geometry_tensors(&p, &g, 128).unwrap();
        let z = coordinate_eom_residual(&p, &g, &t, &Jet::zero(3)).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
        let mut jet = Jet::zero(3);
        jet.d12 = g.basis_element(1);
        let r = coordinate_eom_residual(&p, &g, &t, &jet).unwrap();
        for cc in 0..3 {
            assert!((r[cc] - 2.0 * t.g[1][cc]).norm() < 1e-14);
        }
    }

    fn spec(n: usize) -> LatticeSpec {
        LatticeSpec { n1: n, n2: n, l1: 1.0, l2: 1.0 }
    }

    #[test]
    fn small_lattice_rejected() {
        let g = make_algebra("su(2)", 2).unwrap();
        let s = LatticeSpec { n1: 7, n2: 16, l1: 1.0, l2: 1.0 };
        let data = InitialData::constant(&s, &g, &GroupElement::identity(2));
        assert!(matches!(LatticeField::new(&g, &s, &data.sigma0), Err(Error::Config(_))));
    }

    #[test]
    fn constant_data_stays_constant() {
        let g = make_algebra("su(2)", 2).unwrap();
        let k = EomCoefficients { rho: c(0.0, 2.0 * PI), gamma: c(0.0, 6.0 * PI) };
        let s = spec(16);
        let h = g.group_exp(&AlgElement::from_real(&[0.3, -0.2, 0.9])).unwrap();
        let data = InitialData::constant(&s, &g, &h);
        let f = solve(&g, &s, &data, &k, &SolverOptions::default()).unwrap();
        for row in &f.sigma {
            for x in row {
                assert!(linalg::fnorm(&(&x.mat - &h.mat)) < 1e-12);
            }
        }
        assert!(f.j1.iter().flatten().chain(f.j2.iter().flatten()).all(|j| j.norm() < 1e-12));
    }

    #[test]
    fn abelian_reproduces_dalembert() {
        let g = make_algebra("abelian", 2).unwrap();
        let k = EomCoefficients { rho: c(1.0, 0.0), gamma: c(0.4, 0.0) };
        let s = spec(16);
        let x0 = |t: f64| AlgElement::from_real(&[(2.0 * PI * t).sin(), 0.5 * (4.0 * PI * t).cos()]);
        let y0 = AlgElement::from_real(&[0.7, -0.3]);
        let data = InitialData {
            sigma0: (0..16).map(|i| g.group_exp(&x0(i as f64 / 16.0)).unwrap()).collect(),
            j2_left: vec![y0.clone(); 16],
        };
        let f = solve(&g, &s, &data, &k, &SolverOptions::default()).unwrap();
        for n in 0..16 {
            for i in 0..16 {
                let mut x = x0(i as f64 / 16.0);
                x.axpy(c(n as f64 / 16.0, 0.0), &y0);
                let want = g.group_exp(&x).unwrap();
                assert!(linalg::fnorm(&(&f.sigma[n][i].mat - &want.mat)) < 1e-12);
            }
        }
    }

    #[test]
    fn chiral_data_is_transported() {
        let g = make_algebra("su(2)", 2).unwrap();
        let k = EomCoefficients { rho: c(0.0, 4.0 * PI), gamma: c(0.0, 0.0) };
        let s = spec(16);
        let mut data = InitialData::random_fourier(&s, &g, 3, 0.5, 0.0, 7).unwrap();
        data.j2_left = vec![g.zero(); 16];
        let f = solve(&g, &s, &data, &k, &SolverOptions::default()).unwrap();
        for n in 1..16 {
            for i in 0..16 {
                assert!((&f.j1[n][i] - &f.j1[0][i]).norm() < 1e-12);
            }
        }
    }

    fn run(n: usize, ratio: f64) -> (f64, f64, LatticeField) {
        let g = make_algebra("su(2)", 2).unwrap();
        let k = EomCoefficients { rho: c(1.0, 0.0), gamma: c(ratio, 0.0) };
        let s = spec(n);
        let data = InitialData::random_fourier(&s, &g, 3, 0.6, 0.8, 11).unwrap();
        let f = solve(&g, &s, &data, &k, &SolverOptions::default()).unwrap();
        (f.max_eom_residual(&g, &k), f.max_maurer_cartan_residual(&g), f)
    }

    #[test]
    fn second_order_convergence() {
        let (r1, m1, f1) = run(16, 0.0);
        let (r2, m2, f2) = run(32, 0.0);
        assert!(r1 / r2 > 3.5, "eom ratio {}", r1 / r2);
        assert!(m1 / m2 > 3.5, "mc ratio {}", m1 / m2);
        assert!(f1.max_unitarity_defect() < 1e-10 && f2.max_unitarity_defect() < 1e-10);
        // with torsion the asymptotic regime starts later
        let (r3, _, _) = run(32, 3.0);
        let (r4, _, _) = run(64, 3.0);
        assert!(r3 / r4 > 2.9, "eom ratio {}", r3 / r4);
    }

    #[test]
    fn j1_norm_conserved_along_t2() {
        // the row update preserves Σ⟨J₁,J₁⟩ to rounding, for any ratio
        let g = make_algebra("su(2)", 2).unwrap();
        for ratio in [0.0, 3.0] {
            let (_, _, f) = run(16, ratio);
            let (j11, j12) = f.current_diagnostics(&g);
            let drift = j11.iter().map(|v| (v - j11[0]).norm()).fold(0.0, f64::max);
            assert!(drift < 1e-10 * j11[0].norm(), "{drift}");
            assert_eq!(j12.len(), 15);
        }
    }

    #[test]
    fn left_translation_covariance() {
        let g = make_algebra("su(2)", 2).unwrap();
        let k = EomCoefficients { rho: c(1.0, 0.0), gamma: c(2.0, 0.0) };
        let s = spec(16);
        let data = InitialData::random_fourier(&s, &g, 2, 0.5, 0.5, 3).unwrap();
        let h = g.group_exp(&AlgElement::from_real(&[0.4, 1.1, -0.7])).unwrap();
        let moved = data.left_translate(&g, &h).unwrap();
        let f = solve(&g, &s, &data, &k, &SolverOptions::default()).unwrap();
        let fm = solve(&g, &s, &moved, &k, &SolverOptions::default()).unwrap();
        for n in 0..16 {
            for i in 0..16 {
                let want = h.compose(&f.sigma[n][i]);
                assert!(linalg::fnorm(&(&fm.sigma[n][i].mat - &want.mat)) < 1e-10);
            }
        }
    }

    #[test]
    fn complex_ratio_rejected() {
        let g = make_algebra("su(2)", 2).unwrap();
        let k = EomCoefficients { rho: c(1.0, 0.0), gamma: c(1.0, 1.0) };
        let s = spec(8);
        let data = InitialData::constant(&s, &g, &GroupElement::identity(2));
        assert!(matches!(solve(&g, &s, &data, &k, &SolverOptions::default()), Err(Error::Config(_))));
    }

    #[test]
    fn single_step_matches_solve() {
        let g = make_algebra("su(2)", 2).unwrap();
        let k = EomCoefficients { rho: c(1.0, 0.0), gamma: c(3.0, 0.0) };
        let s = spec(8);
        let data = InitialData::random_fourier(&s, &g, 2, 0.5, 0.5, 5).unwrap();
        let f0 = LatticeField::new(&g, &s, &data.sigma0).unwrap();
        let f1 = step(&g, &f0, &k, &data.j2_left[0]).unwrap();
        let full = solve(&g, &s, &data, &k, &SolverOptions::default()).unwrap();
        assert_eq!(f1.rows(), 2);
        for i in 0..8 {
            assert!(linalg::fnorm(&(&f1.sigma[1][i].mat - &full.sigma[1][i].mat)) < 1e-14);
        }
    }

    #[test]
    fn corrector_converges_for_weak_fields_on_fine_grids() {
        let g = make_algebra("su(2)", 2).unwrap();
        let s = LatticeSpec { n1: 128, n2: 16, l1: 1.0, l2: 0.125 };
        let data = InitialData::random_fourier(&s, &g, 3, 0.02, 0.026, 11).unwrap();
        let k = EomCoefficients { rho: C64::new(1.0, 0.0), gamma: C64::new(3.0, 0.0) };
        assert!(solve(&g, &s, &data, &k, &SolverOptions::default()).is_ok());
    }
}
