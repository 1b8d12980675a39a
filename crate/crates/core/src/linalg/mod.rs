//! Numerical kernels: sparse storage, banded direct solvers, the smallest
//! generalized eigenvalue of a symmetric pencil, Riesz dual norms, and the
//! dense SVD used by the POD.

pub mod banded;
pub mod dense;
pub mod eigen;
pub mod riesz;
pub mod sparse;

pub use banded::{BandCholesky, BandLu};
pub use eigen::{smallest_generalized_eigenvalue, PencilEigenSolver};
pub use riesz::RieszContext;
pub use sparse::{CsrMatrix, SparsityPattern};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative residual tolerance of [`sparse_solve`]:
/// ‖Ax − b‖₂ ≤ tol · (‖A‖_F ‖x‖₂ + ‖b‖₂).
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn check_residual(a: &CsrMatrix, lu: &BandLu, x: &[f64], b: &[f64]) -> Result<()> {
    let ax = a.mul_vec(x);
    let res: f64 = ax
        .iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt();
    let scale = a.frobenius_norm() * norm2(x) + norm2(b);
    if !res.is_finite() || res > SOLVE_RESIDUAL_TOL * scale {
        return Err(Error::solver(format!(
            "sparse solve residual {res:e} exceeds {SOLVE_RESIDUAL_TOL:e} x {scale:e} \
             (pivot ratio {:e}; matrix is singular or ill-conditioned)",
            lu.pivot_ratio()
        )));
    }
    Ok(())
}

/// Solves A x = b for a square sparse A by banded LU with partial pivoting.
pub fn sparse_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n_rows() {
        return Err(Error::Dimension {
            context: "sparse_solve right-hand side",
            expected: a.n_rows(),
            actual: b.len(),
        });
    }
    let lu = BandLu::factor(a)?;
    let x = lu.solve(b);
    check_residual(a, &lu, &x, b)?;
    Ok(x)
}

/// Solves A X = B column by column against one factorization.
pub fn sparse_solve_many(a: &CsrMatrix, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.nrows() != a.n_rows() {
        return Err(Error::Dimension {
            context: "sparse_solve_many right-hand sides",
            expected: a.n_rows(),
            actual: b.nrows(),
        });
    }
    let lu = BandLu::factor(a)?;
    let mut x = b.clone();
    for c in 0..x.ncols() {
        let mut col = x.column(c).clone_owned();
        lu.solve_in_place(col.as_mut_slice());
        check_residual(a, &lu, col.as_slice(), b.column(c).as_slice())?;
        x.column_mut(c).copy_from(&col);
    }
    Ok(x)
}

/// Solves A x = b and Aᵀ z = c against one factorization, checking both
/// residuals.
pub fn sparse_solve_pair(a: &CsrMatrix, b: &[f64], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if b.len() != a.n_rows() || c.len() != a.n_rows() {
        return Err(Error::Dimension {
            context: "sparse_solve_pair right-hand sides",
            expected: a.n_rows(),
            actual: if b.len() != a.n_rows() { b.len() } else { c.len() },
        });
    }
    let lu = BandLu::factor(a)?;
    let x = lu.solve(b);
    check_residual(a, &lu, &x, b)?;
    let z = lu.solve_transpose(c);
    let atz = a.tr_mul_vec(&z);
    let res = norm2(&atz.iter().zip(c).map(|(u, v)| u - v).collect::<Vec<_>>());
    let scale = a.frobenius_norm() * norm2(&z) + norm2(c);
    if !res.is_finite() || res > SOLVE_RESIDUAL_TOL * scale {
        return Err(Error::solver(format!(
            "transposed sparse solve residual {res:e} exceeds {SOLVE_RESIDUAL_TOL:e} x {scale:e} \
             (pivot ratio {:e})",
            lu.pivot_ratio()
        )));
    }
    Ok((x, z))
}
