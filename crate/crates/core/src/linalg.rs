//! Small dense helpers shared by the estimators.

use alloc::vec::Vec;

use nalgebra::DMatrix;

/// Least-squares coefficients of `y` on `x` via Householder QR.
///
/// Returns `Err(column)` with the first column of `x` whose QR pivot is
/// negligible relative to the largest one.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>, usize> {
    let p = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    for j in 0..p {
        if !(r[(j, j)].abs() > 1e-10 * scale) {
            return Err(j);
        }
    }
    let qty = qr.q().transpose() * y;
    let mut b = qty.rows(0, p).into_owned();
    if !r.solve_upper_triangular_mut(&mut b) {
        return Err(p.saturating_sub(1));
    }
    Ok(b)
}

/// Largest singular value.
pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// Largest modulus among the eigenvalues of a square matrix.
pub(crate) fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| libm::hypot(z.re, z.im)).fold(0.0, f64::max)
}

/// Companion matrix of a VAR(q) with `k x k` lag matrices.
pub(crate) fn companion(a: &[DMatrix<f64>]) -> DMatrix<f64> {
    let q = a.len();
    let k = a[0].nrows();
    let mut c = DMatrix::zeros(k * q, k * q);
    for (l, al) in a.iter().enumerate() {
        c.view_mut((0, l * k), (k, k)).copy_from(al);
    }
    for i in 0..k * (q - 1) {
        c[(k + i, i)] = 1.0;
    }
    c
}

/// Sample variance with the `n - 1` denominator (0 for fewer than 2 points).
pub(crate) fn variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let v: Vec<f64> = xs.collect();
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64
}
