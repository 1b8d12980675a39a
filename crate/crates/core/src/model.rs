//! The full-order finite element model shared by both reduced models.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{assemble_operators, AffineOperatorSet};
use crate::kl::{build_kl_2d, KlExpansion};
use crate::linalg::{dot, sparse_solve, sparse_solve_pair, PencilEigenSolver, RieszContext};
use crate::mesh::{build_mesh, Triangulation};

/// Physical parameters of the reaction field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParameters {
    pub kappa0: f64,
    pub sigma: f64,
    pub correlation_length: f64,
    pub k: usize,
}

impl Default for FieldParameters {
    fn default() -> Self {
        FieldParameters {
            kappa0: -1000.0,
            sigma: 200.0,
            correlation_length: 1.0,
            k: 5,
        }
    }
}

/// Mesh, KL expansion, affine operators and the X-inner-product machinery.
#[derive(Debug, Clone)]
pub struct FullOrderModel {
    pub mesh: Triangulation,
    pub kl: KlExpansion,
    pub ops: AffineOperatorSet,
    pub params: FieldParameters,
    pub riesz: RieszContext,
    pencil: Arc<PencilEigenSolver>,
}

impl FullOrderModel {
    pub fn build(n_cells_per_side: usize, params: FieldParameters) -> Result<Self> {
        let mesh = build_mesh(n_cells_per_side)?;
        let kl = build_kl_2d(params.correlation_length, params.k)?;
        let ops = assemble_operators(&mesh, &kl, params.kappa0, params.sigma)?;
        Self::from_parts(mesh, kl, ops, params)
    }

    pub fn from_parts(
        mesh: Triangulation,
        kl: KlExpansion,
        ops: AffineOperatorSet,
        params: FieldParameters,
    ) -> Result<Self> {
        let riesz = RieszContext::new(Arc::new(ops.gram_x.clone()))?;
        let pencil = Arc::new(PencilEigenSolver::new(&ops.gram_x)?);
        Ok(FullOrderModel {
            mesh,
            kl,
            ops,
            params,
            riesz,
            pencil,
        })
    }

    pub fn m_fe(&self) -> usize {
        self.ops.m_fe
    }

    pub fn k(&self) -> usize {
        self.ops.k()
    }

    /// u(y, μ) from A(y, μ) u = f.
    pub fn solve(&self, y: &[f64], mu: &[f64; 2]) -> Result<Vec<f64>> {
        sparse_solve(&self.ops.operator(y, mu)?, &self.ops.f_vec)
    }

    /// Primal solution and first dual solution (Aᵀ z = −l) from one factorization.
    pub fn solve_primal_dual(&self, y: &[f64], mu: &[f64; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
        let neg_l: Vec<f64> = self.ops.l_vec.iter().map(|v| -v).collect();
        sparse_solve_pair(&self.ops.operator(y, mu)?, &self.ops.f_vec, &neg_l)
    }

    pub fn output(&self, u: &[f64]) -> f64 {
        dot(&self.ops.l_vec, u)
    }

    /// α(y) = λ_min(sym A(y, μ), gram_X); convection is skew and drops out.
    pub fn coercivity(&self, y: &[f64]) -> Result<f64> {
        let value = self.pencil.smallest(&self.ops.symmetric_operator(y)?)?;
        if !(value > 0.0) {
            return Err(Error::CoercivityLost { value });
        }
        Ok(value)
    }
}

/// α(y, μ): smallest generalized eigenvalue of (sym A(y, μ), gram_X).
pub fn coercivity_factor_point(model: &FullOrderModel, y: &[f64], mu: &[f64; 2]) -> Result<f64> {
    let a = model.ops.operator(y, mu)?.symmetric_part();
    let value = model.pencil.smallest(&a)?;
    if !(value > 0.0) {
        return Err(Error::CoercivityLost { value });
    }
    Ok(value)
}

/// Full-order solution u(y, μ).
pub fn solve_mcfe(model: &FullOrderModel, y: &[f64], mu: &[f64; 2]) -> Result<Vec<f64>> {
    model.solve(y, mu)
}
