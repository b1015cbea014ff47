//! Small dense helpers shared by the update equations.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Replace `m` with `(m + mᵀ) / 2`.
pub fn symmetrize_mut(m: &mut Mat) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn symmetrized(mut m: Mat) -> Mat {
    symmetrize_mut(&mut m);
    m
}

/// tr(A·B) without forming the product.
pub fn trace_of_product(a: &Mat, b: &Mat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn cholesky(m: &Mat) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
}

/// log|M| for a symmetric positive-definite matrix, `None` if factorisation fails.
pub fn ln_det_spd(m: &Mat) -> Option<f64> {
    let chol = cholesky(m)?;
    Some(ln_det_from_cholesky(&chol))
}

pub fn ln_det_from_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum()
}

/// Inverse of a symmetric positive-definite matrix, symmetrised.
pub fn inverse_spd(m: &Mat) -> Option<Mat> {
    let chol = cholesky(m)?;
    Some(symmetrized(chol.inverse()))
}

/// Inverse and log-determinant of a symmetric positive-definite matrix.
pub fn inverse_and_ln_det_spd(m: &Mat) -> Option<(Mat, f64)> {
    let chol = cholesky(m)?;
    let ld = ln_det_from_cholesky(&chol);
    Some((symmetrized(chol.inverse()), ld))
}

pub fn kronecker(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Mat) -> f64 {
    let sym = symmetrized(m.clone());
    sym.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Second moment `cov + mean·meanᵀ`.
pub fn second_moment(mean: &Vector, cov: &Mat) -> Mat {
    cov + mean * mean.transpose()
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
