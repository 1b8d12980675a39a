//! Smallest eigenvalue of a symmetric-definite pencil A v = λ B v.
//!
//! A dense Cholesky reduction locates λ_min, and shifted inverse iteration on
//! the sparse pencil (shift just below that estimate) converges to its
//! eigenvector in a handful of steps. The value returned is the Rayleigh
//! quotient of the converged vector, hence never below the true λ_min.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::banded::{BandCholesky, BandLu};
use crate::linalg::sparse::CsrMatrix;

const MAX_ITERATIONS: usize = 60;
const REL_TOL: f64 = 1e-8;

/// Reusable solver for pencils sharing the same right-hand matrix B.
#[derive(Debug, Clone)]
pub struct PencilEigenSolver {
    b: CsrMatrix,
    l_inv: DMatrix<f64>,
}

impl PencilEigenSolver {
    pub fn new(b: &CsrMatrix) -> Result<Self> {
        let chol = BandCholesky::factor(b)?;
        let l = chol.lower_dense();
        let n = l.nrows();
        let l_inv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| Error::solver("singular Cholesky factor of B"))?;
        Ok(PencilEigenSolver { b: b.clone(), l_inv })
    }

    pub fn dim(&self) -> usize {
        self.b.n_rows()
    }

    fn dense_estimate(&self, a: &CsrMatrix) -> Result<f64> {
        let n = self.dim();
        // T = L⁻¹ A, accumulated column by column from the sparse rows of A.
        let mut t = DMatrix::<f64>::zeros(n, n);
        for (i, j, v) in a.triplets() {
            if v != 0.0 {
                let src = self.l_inv.column(i).clone_owned();
                let mut dst = t.column_mut(j);
                dst.axpy(v, &src, 1.0);
            }
        }
        let c = &t * self.l_inv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let values = c.symmetric_eigenvalues();
        values
            .iter()
            .copied()
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::solver("dense symmetric eigensolver produced no finite value"))
    }

    /// Smallest eigenvalue of (A, B); A must be symmetric.
    pub fn smallest(&self, a: &CsrMatrix) -> Result<f64> {
        let n = self.dim();
        if a.n_rows() != n || a.n_cols() != n {
            return Err(Error::Dimension {
                context: "generalized eigenproblem",
                expected: n,
                actual: a.n_rows(),
            });
        }
        let estimate = self.dense_estimate(a)?;
        let shift = estimate - 1e-6 * estimate.abs().max(f64::MIN_POSITIVE.sqrt());
        let mut triplets: Vec<(usize, usize, f64)> = a.triplets().collect();
        triplets.extend(self.b.triplets().map(|(i, j, v)| (i, j, -shift * v)));
        let shifted = CsrMatrix::from_triplets(n, n, &triplets);
        let lu = BandLu::factor(&shifted)?;

        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.25 * ((i as f64) * 0.7).sin())
            .collect();
        let mut previous = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let mut y = self.b.mul_vec(&x);
            lu.solve_in_place(&mut y);
            let bn = self.b.quadratic_form(&y).sqrt();
            if !(bn > 0.0) || !bn.is_finite() {
                return Err(Error::solver("inverse iteration broke down"));
            }
            y.iter_mut().for_each(|v| *v /= bn);
            let rq = a.quadratic_form(&y) / self.b.quadratic_form(&y);
            x = y;
            let scale = rq.abs().max(estimate.abs()).max(f64::MIN_POSITIVE);
            if (rq - previous).abs() <= REL_TOL * scale && (rq - estimate).abs() <= REL_TOL * scale
            {
                return Ok(rq);
            }
            previous = rq;
        }
        Err(Error::solver(format!(
            "inverse iteration did not converge within {MAX_ITERATIONS} steps \
             (last Rayleigh quotient {previous:e}, dense estimate {estimate:e})"
        )))
    }
}

/// λ_min of A_sym v = λ B v for symmetric A_sym and SPD B.
pub fn smallest_generalized_eigenvalue(a_sym: &CsrMatrix, b: &CsrMatrix) -> Result<f64> {
    PencilEigenSolver::new(b)?.smallest(a_sym)
}
