//! Least-squares solves on tall design matrices.
//!
//! The inner solve of the model fitter goes through a column-pivoted QR
//! decomposition so that rank deficiency is detected and reported instead of
//! being papered over by a pseudo-inverse.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Rank of an upper-triangular factor, LAPACK-style relative tolerance.
fn triangular_rank(r: &DMatrix<f64>, rows: usize) -> usize {
    let p = r.ncols().min(r.nrows());
    let dmax = (0..p).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if dmax == 0.0 {
        return 0;
    }
    let tol = f64::EPSILON * rows.max(p) as f64 * dmax;
    (0..p).filter(|&i| r[(i, i)].abs() > tol).count()
}

/// Numerical column rank of a general matrix.
pub(crate) fn matrix_rank(a: &DMatrix<f64>) -> usize {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0;
    }
    let rows = a.nrows();
    let qr = a.clone().col_piv_qr();
    triangular_rank(&qr.r(), rows)
}

/// Minimum-residual solution of `a x = b` for a tall full-rank `a`.
///
/// Errors with [`Error::SingularDesign`] when `a` is column rank deficient.
pub(crate) fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, p) = a.shape();
    debug_assert!(m >= p, "least squares requires at least as many rows as columns");
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let rank = triangular_rank(&r, m);
    if rank < p {
        return Err(Error::SingularDesign { rank, cols: p });
    }

    // a P = Q R  =>  x = P (R^{-1} Q^T b)
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let c = DVector::from_iterator(p, (0..p).map(|i| qtb[i]));
    let mut z = r
        .view((0, 0), (p, p))
        .solve_upper_triangular(&c)
        .ok_or(Error::SingularDesign { rank, cols: p })?;
    qr.p().inv_permute_rows(&mut z);
    Ok(z)
}

/// Inverse of the cross-product `a^T a` (the unscaled coefficient covariance
/// of a weighted least-squares solve with `a = sqrt(W) X`).
pub(crate) fn cross_product_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m = a.transpose() * a;
    m.cholesky().map(|c| c.inverse())
}
