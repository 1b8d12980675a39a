use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::banded::BandCholesky;
use crate::linalg::sparse::CsrMatrix;
use crate::linalg::dot;

/// Riesz representation for the inner product defined by an SPD Gram matrix.
///
/// For a functional with coefficient vector F, the dual norm is
/// √(Fᵀ G⁻¹ F). A `RieszContext` can also act block-wise on vectors that
/// stack several copies of the spatial space (the Gram of the tensor space
/// with an orthonormal stochastic basis is I ⊗ G).
#[derive(Debug, Clone)]
pub struct RieszContext {
    gram: Arc<CsrMatrix>,
    factor: Arc<BandCholesky>,
}

impl RieszContext {
    pub fn new(gram: Arc<CsrMatrix>) -> Result<Self> {
        let factor = Arc::new(BandCholesky::factor(&gram)?);
        Ok(RieszContext { gram, factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    pub fn gram(&self) -> &CsrMatrix {
        &self.gram
    }

    pub fn factor(&self) -> &BandCholesky {
        &self.factor
    }

    /// G⁻¹ F, the Riesz representer of F.
    pub fn representer(&self, f: &[f64]) -> Vec<f64> {
        self.factor.solve(f)
    }

    /// √(Fᵀ G⁻¹ F) for a functional on the spatial space.
    pub fn dual_norm(&self, f: &[f64]) -> Result<f64> {
        Ok(self.dual_norm_sq(f)?.sqrt())
    }

    pub fn dual_norm_sq(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.dim() {
            return Err(Error::Dimension {
                context: "riesz_dual_norm",
                expected: self.dim(),
                actual: f.len(),
            });
        }
        // ‖L⁻¹F‖² is Fᵀ G⁻¹ F and is non-negative by construction.
        let mut y = f.to_vec();
        self.factor.solve_lower_in_place(&mut y);
        Ok(dot(&y, &y))
    }

    /// Dual norm of a functional on the block space (I_blocks ⊗ G).
    pub fn block_dual_norm(&self, f: &[f64]) -> Result<f64> {
        let m = self.dim();
        if f.len() % m != 0 {
            return Err(Error::Dimension {
                context: "block riesz_dual_norm",
                expected: m,
                actual: f.len() % m,
            });
        }
        let mut total = 0.0;
        for block in f.chunks(m) {
            total += self.dual_norm_sq(block)?;
        }
        Ok(total.sqrt())
    }

    /// √(zᵀ G z), the primal norm of a coefficient vector.
    pub fn norm(&self, z: &[f64]) -> f64 {
        self.gram.quadratic_form(z).max(0.0).sqrt()
    }
}

/// Convenience wrapper: the dual norm of `f` with respect to `ctx`.
pub fn riesz_dual_norm(ctx: &RieszContext, f: &[f64]) -> Result<f64> {
    ctx.dual_norm(f)
}
