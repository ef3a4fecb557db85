//! Matrix Lie algebras: bases, structure constants, invariant pairing,
//! exponentials and adjoint actions.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, C64};

/// Which invariant pairing `kappa` holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    /// Defining-representation trace form, tr(xy).
    Trace,
    /// Killing form, tr(ad x ad y).
    Killing,
}

/// A finite-dimensional matrix Lie algebra with a chosen basis and pairing.
#[derive(Debug, Clone)]
pub struct AlgebraData {
    pub name: String,
    /// Matrix size of the defining representation.
    pub n: usize,
    pub dim: usize,
    pub rank: usize,
    pub basis: Vec<Mat>,
    /// Structure constants, `f[(a * dim + b) * dim + c] = f_ab^c`.
    pub f: Vec<C64>,
    pub kappa: DMatrix<C64>,
    pub kappa_inv: DMatrix<C64>,
    /// Casimir coefficients: c = Σ casimir[(a,b)] t_a ⊗ t_b, i.e. κ^{ab}.
    pub casimir: DMatrix<C64>,
    pub pairing: Pairing,
    gram_inv: DMatrix<C64>,
}

/// Coefficients of an algebra element in the basis {t_a}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgElement {
    pub coeffs: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub mat: Mat,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn gell_mann(n: usize) -> Vec<Mat> {
    // t = -(i/2) λ
    let half_i = c(0.0, -0.5);
    let mut out = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for k in (j + 1)..n {
            let mut s = Mat::zeros(n, n);
            s[(j, k)] = c(1.0, 0.0);
            s[(k, j)] = c(1.0, 0.0);
            out.push(s * half_i);
            let mut a = Mat::zeros(n, n);
            a[(j, k)] = c(0.0, -1.0);
            a[(k, j)] = c(0.0, 1.0);
            out.push(a * half_i);
        }
    }
    for l in 1..n {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = Mat::zeros(n, n);
        for m in 0..l {
            d[(m, m)] = c(norm, 0.0);
        }
        d[(l, l)] = c(-(l as f64) * norm, 0.0);
        out.push(d * half_i);
    }
    out
}

fn abelian_basis(dim: usize) -> Vec<Mat> {
    (0..dim)
        .map(|k| {
            let mut d = Mat::zeros(dim, dim);
            d[(k, k)] = c(0.0, std::f64::consts::FRAC_1_SQRT_2);
            d
        })
        .collect()
}

/// Builds an algebra by key: `su(2)`, `su(n)` (with `n`), `su3`-style
/// shorthands, or `abelian` / `u1` (commutative stub of dimension `n`).
pub fn make_algebra(name: &str, n: usize) -> Result<AlgebraData> {
    let key = name.trim().to_ascii_lowercase();
    let (basis, rank, label) = match key.as_str() {
        "su(2)" | "su2" => (gell_mann(2), 1, "su(2)".to_string()),
        "su(n)" | "sun" => {
            if n < 2 {
                return Err(Error::Config(format!("su(n) requires n >= 2, got {n}")));
            }
            (gell_mann(n), n - 1, format!("su({n})"))
        }
        "abelian" | "u1" | "u(1)" => {
            if n < 1 {
                return Err(Error::Config("abelian stub requires dimension >= 1".into()));
            }
            (abelian_basis(n), n, format!("abelian({n})"))
        }
        other => {
            let parsed = other
                .strip_prefix("su(")
                .and_then(|s| s.strip_suffix(')'))
                .or_else(|| other.strip_prefix("su"))
                .and_then(|s| s.parse::<usize>().ok());
            match parsed {
                Some(m) if m >= 2 => (gell_mann(m), m - 1, format!("su({m})")),
                _ => return Err(Error::Config(format!("unsupported algebra id '{name}'"))),
            }
        }
    };
    Ok(from_basis(label, basis, rank, Pairing::Trace))
}

fn from_basis(name: String, basis: Vec<Mat>, rank: usize, pairing: Pairing) -> AlgebraData {
    let dim = basis.len();
    let n = basis[0].nrows();
    let gram = DMatrix::from_fn(dim, dim, |a, b| (&basis[a] * &basis[b]).trace());
    let gram_inv = gram.clone().try_inverse().expect("trace form is nondegenerate on the basis");
    let mut alg = AlgebraData {
        name,
        n,
        dim,
        rank,
        basis,
        f: vec![C64::new(0.0, 0.0); dim * dim * dim],
        kappa: gram.clone(),
        kappa_inv: gram_inv.clone(),
        casimir: gram_inv.clone(),
        pairing: Pairing::Trace,
        gram_inv,
    };
    for a in 0..dim {
        for b in 0..dim {
            let m = linalg::commutator(&alg.basis[a], &alg.basis[b]);
            let co = alg.decompose(&m);
            for (cc, v) in co.coeffs.into_iter().enumerate() {
                alg.f[(a * dim + b) * dim + cc] = v;
            }
        }
    }
    if pairing == Pairing::Killing {
        alg.with_killing_pairing().unwrap_or(alg)
    } else {
        alg
    }
}

impl AlgebraData {
    pub fn f(&self, a: usize, b: usize, c: usize) -> C64 {
        self.f[(a * self.dim + b) * self.dim + c]
    }

    /// Killing form K_ab = Σ f_ac^d f_bd^c.
    pub fn killing_form(&self) -> DMatrix<C64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |a, b| {
            let mut s = C64::new(0.0, 0.0);
            for cc in 0..d {
                for e in 0..d {
                    s += self.f(a, cc, e) * self.f(b, e, cc);
                }
            }
            s
        })
    }

    /// Same algebra with the pairing replaced by the Killing form.
    pub fn with_killing_pairing(&self) -> Result<AlgebraData> {
        let k = self.killing_form();
        let k_inv = k
            .clone()
            .try_inverse()
            .filter(|_| k.iter().any(|v| v.norm() > 1e-12))
            .ok_or_else(|| Error::Inadmissible(format!("Killing form of {} is degenerate", self.name)))?;
        let mut out = self.clone();
        out.kappa = k;
        out.kappa_inv = k_inv.clone();
        out.casimir = k_inv;
        out.pairing = Pairing::Killing;
        Ok(out)
    }

    pub fn is_traceless(&self) -> bool {
        self.basis.iter().all(|t| t.trace().norm() < 1e-14)
    }

    /// Nearest group element on the compact real form: unitary, and special
    /// unitary when the algebra is traceless.
    pub fn reproject(&self, m: &Mat) -> Result<GroupElement> {
        let mat = if self.is_traceless() {
            linalg::project_special_unitary(m)?
        } else {
            linalg::project_unitary(m)?
        };
        Ok(GroupElement { mat })
    }

    pub fn is_abelian(&self) -> bool {
        self.f.iter().all(|v| v.norm() < 1e-14)
    }

    pub fn zero(&self) -> AlgElement {
        AlgElement::zero(self.dim)
    }

    pub fn basis_element(&self, a: usize) -> AlgElement {
        let mut e = self.zero();
        e.coeffs[a] = C64::new(1.0, 0.0);
        e
    }

    fn check(&self, x: &AlgElement) -> Result<()> {
        if x.coeffs.len() != self.dim {
            return Err(Error::Shape { expected: self.dim, got: x.coeffs.len() });
        }
        Ok(())
    }

    pub fn to_matrix(&self, x: &AlgElement) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for (a, v) in x.coeffs.iter().enumerate() {
            if *v != C64::new(0.0, 0.0) {
                m += &self.basis[a] * *v;
            }
        }
        m
    }

    /// Coordinates of a matrix in the basis, projecting orthogonally (trace
    /// form) onto the span.
    pub fn decompose(&self, m: &Mat) -> AlgElement {
        let traces: Vec<C64> = self.basis.iter().map(|t| (t * m).trace()).collect();
        let coeffs = (0..self.dim)
            .map(|a| (0..self.dim).map(|b| self.gram_inv[(a, b)] * traces[b]).sum())
            .collect();
        AlgElement { coeffs }
    }

    pub fn bracket(&self, x: &AlgElement, y: &AlgElement) -> Result<AlgElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.bracket_unchecked(x, y))
    }

    pub(crate) fn bracket_unchecked(&self, x: &AlgElement, y: &AlgElement) -> AlgElement {
        let d = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); d];
        for a in 0..d {
            if x.coeffs[a] == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..d {
                let xy = x.coeffs[a] * y.coeffs[b];
                if xy == C64::new(0.0, 0.0) {
                    continue;
                }
                let base = (a * d + b) * d;
                for (cc, o) in out.iter_mut().enumerate() {
                    *o += xy * self.f[base + cc];
                }
            }
        }
        AlgElement { coeffs: out }
    }

    pub fn pairing(&self, x: &AlgElement, y: &AlgElement) -> Result<C64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.pairing_unchecked(x, y))
    }

    pub(crate) fn pairing_unchecked(&self, x: &AlgElement, y: &AlgElement) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for a in 0..self.dim {
            for b in 0..self.dim {
                s += x.coeffs[a] * self.kappa[(a, b)] * y.coeffs[b];
            }
        }
        s
    }

    pub fn group_exp(&self, x: &AlgElement) -> Result<GroupElement> {
        self.check(x)?;
        Ok(GroupElement { mat: linalg::expm(&self.to_matrix(x)) })
    }

    pub fn adjoint(&self, g: &GroupElement, x: &AlgElement) -> Result<AlgElement> {
        self.check(x)?;
        let inv = g.inverse()?;
        Ok(self.decompose(&(&g.mat * self.to_matrix(x) * inv.mat)))
    }

    /// The Casimir as an operator on the tensor square of the defining
    /// representation.
    pub fn casimir_tensor(&self) -> Mat {
        let nn = self.n * self.n;
        let mut out = Mat::zeros(nn, nn);
        for a in 0..self.dim {
            for b in 0..self.dim {
                let k = self.casimir[(a, b)];
                if k.norm() > 0.0 {
                    out += self.basis[a].kronecker(&self.basis[b]) * k;
                }
            }
        }
        out
    }

    /// κ^{ce} κ^{df} κ_dg f_ac^g κ_fh f_be^h. Equals −κ_ab exactly when κ is
    /// the Killing form.
    pub fn contraction(&self) -> DMatrix<C64> {
        let d = self.dim;
        // lowered structure constants F_acd = κ_dg f_ac^g
        let mut low = vec![C64::new(0.0, 0.0); d * d * d];
        for a in 0..d {
            for cc in 0..d {
                for dd in 0..d {
                    let mut s = C64::new(0.0, 0.0);
                    for g in 0..d {
                        s += self.kappa[(dd, g)] * self.f(a, cc, g);
                    }
                    low[(a * d + cc) * d + dd] = s;
                }
            }
        }
        DMatrix::from_fn(d, d, |a, b| {
            let mut s = C64::new(0.0, 0.0);
            for cc in 0..d {
                for e in 0..d {
                    let kce = self.kappa_inv[(cc, e)];
                    if kce.norm() == 0.0 {
                        continue;
                    }
                    for dd in 0..d {
                        for ff in 0..d {
                            s += kce
                                * self.kappa_inv[(dd, ff)]
                                * low[(a * d + cc) * d + dd]
                                * low[(b * d + e) * d + ff];
                        }
                    }
                }
            }
            s
        })
    }
}

impl AlgElement {
    pub fn zero(dim: usize) -> Self {
        AlgElement { coeffs: vec![C64::new(0.0, 0.0); dim] }
    }

    pub fn from_real(v: &[f64]) -> Self {
        AlgElement { coeffs: v.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        AlgElement { coeffs: self.coeffs.iter().map(|z| z * s).collect() }
    }

    pub fn axpy(&mut self, s: C64, other: &AlgElement) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }
}

impl Add for &AlgElement {
    type Output = AlgElement;
    fn add(self, o: &AlgElement) -> AlgElement {
        AlgElement { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &AlgElement {
    type Output = AlgElement;
    fn sub(self, o: &AlgElement) -> AlgElement {
        AlgElement { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &AlgElement {
    type Output = AlgElement;
    fn neg(self) -> AlgElement {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<C64> for &AlgElement {
    type Output = AlgElement;
    fn mul(self, s: C64) -> AlgElement {
        self.scale(s)
    }
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        GroupElement { mat: linalg::identity(n) }
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        self.mat
            .clone()
            .try_inverse()
            .map(|mat| GroupElement { mat })
            .ok_or_else(|| Error::Numerical("singular group element".into()))
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement { mat: &self.mat * &other.mat }
    }

    /// ‖g g† − 1‖_F.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.mat.nrows();
        linalg::fnorm(&(&self.mat * self.mat.adjoint() - linalg::identity(n)))
    }
}
