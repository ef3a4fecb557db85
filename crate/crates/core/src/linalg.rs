//! Dense complex matrix helpers: logarithm, polar projection, commutant
//! projection. Exponentials come straight from nalgebra's Padé routine.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn commutator(x: &Mat, y: &Mat) -> Mat {
    x * y - y * x
}

/// Frobenius norm.
pub fn fnorm(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &Mat) -> C64 {
    m.trace()
}

pub fn expm(m: &Mat) -> Mat {
    m.exp()
}

fn sqrtm_denman_beavers(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = identity(n);
    for _ in 0..100 {
        let yi = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular iterate in matrix square root".into()))?;
        let zi = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular iterate in matrix square root".into()))?;
        let y_next = (&y + zi) * C64::new(0.5, 0.0);
        let z_next = (&z + yi) * C64::new(0.5, 0.0);
        let delta = fnorm(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * fnorm(&y).max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::Numerical("matrix square root did not converge".into()))
}

/// Principal matrix logarithm by inverse scaling and squaring.
pub fn logm(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let id = identity(n);
    let mut x = a.clone();
    let mut halvings = 0u32;
    while fnorm(&(&x - &id)) > 0.25 {
        x = sqrtm_denman_beavers(&x)?;
        halvings += 1;
        if halvings > 60 {
            return Err(Error::Numerical("matrix logarithm: no convergence".into()));
        }
    }
    let e = &x - &id;
    let mut power = e.clone();
    let mut acc = e.clone();
    for m in 2..200 {
        power = &power * &e;
        let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
        let term = &power * C64::new(sign / m as f64, 0.0);
        acc += &term;
        if fnorm(&term) < 1e-18 {
            break;
        }
    }
    Ok(acc * C64::new(2f64.powi(halvings as i32), 0.0))
}

/// Nearest special-unitary matrix: unitary polar factor rescaled to unit
/// determinant.
pub fn project_special_unitary(m: &Mat) -> Result<Mat> {
    let n = m.nrows();
    let w = project_unitary(m)?;
    let det = w.determinant();
    let phase = C64::from_polar(1.0, -det.arg() / n as f64);
    Ok(w * phase)
}

/// Unitary polar factor U of M = U P.
pub fn project_unitary(m: &Mat) -> Result<Mat> {
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-12) {
        return Err(Error::Numerical("polar factor undefined: singular matrix".into()));
    }
    let u = svd.u.ok_or_else(|| Error::Numerical("svd failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("svd failed".into()))?;
    Ok(u * v_t)
}

/// Projects `y` onto the commutant of a normal matrix `h` (matrices that
/// commute with `h`), orthogonally in the Frobenius inner product.
/// Eigenvalues of `h` closer than `cluster_tol` are treated as degenerate.
pub fn project_commutant(h: &Mat, y: &Mat, cluster_tol: f64) -> Mat {
    let n = h.nrows();
    let (q, t) = h.clone().schur().unpack();
    let eig: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    // cluster labels
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if label[i] != usize::MAX {
            continue;
        }
        label[i] = next;
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..n {
                if label[j] == usize::MAX
                    && (0..n).any(|k| label[k] == next && (eig[k] - eig[j]).norm() < cluster_tol)
                {
                    label[j] = next;
                    grew = true;
                }
            }
        }
        next += 1;
    }
    let qh = q.adjoint();
    let mut yq = &qh * y * &q;
    for i in 0..n {
        for j in 0..n {
            if label[i] != label[j] {
                yq[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    &q * yq * qh
}
