//! Weighted proper orthogonal decomposition.
//!
//! With S = S̃ᵀS̃ and W = W̃ᵀW̃, the SVD S̃ U W̃ᵀ = Φ̃ Σ Ṽᵀ yields the
//! S-orthonormal basis Φ = S̃⁻¹ Φ̃, which minimizes the W-weighted mean
//! square S-norm projection error of the snapshot columns of U.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::dense::{fix_column_signs, left_singular_vectors, numerical_rank};
use crate::linalg::{BandCholesky, CsrMatrix};

/// An SPD weighting matrix together with a Cholesky-type factor.
#[derive(Debug, Clone)]
pub enum Weighting {
    /// c · I.
    Scaled { dim: usize, c: f64 },
    Diagonal(Vec<f64>),
    /// Sparse SPD matrix G = L Lᵀ with S̃ = Lᵀ.
    Banded {
        matrix: Arc<CsrMatrix>,
        factor: Arc<BandCholesky>,
    },
    /// I_blocks ⊗ G acting on vectors made of `blocks` stacked copies.
    BlockBanded {
        matrix: Arc<CsrMatrix>,
        factor: Arc<BandCholesky>,
        blocks: usize,
    },
    Dense {
        matrix: DMatrix<f64>,
        lower: DMatrix<f64>,
    },
}

impl Weighting {
    pub fn identity(dim: usize) -> Self {
        Weighting::Scaled { dim, c: 1.0 }
    }

    /// (1/N) I, the Monte Carlo quadrature weight.
    pub fn uniform(n: usize) -> Self {
        Weighting::Scaled {
            dim: n,
            c: 1.0 / n as f64,
        }
    }

    pub fn diagonal(d: Vec<f64>) -> Result<Self> {
        if d.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config("diagonal weighting must be positive"));
        }
        Ok(Weighting::Diagonal(d))
    }

    pub fn banded(matrix: Arc<CsrMatrix>) -> Result<Self> {
        let factor = Arc::new(Self::spd_factor(&matrix)?);
        Ok(Weighting::Banded { matrix, factor })
    }

    pub fn block_banded(matrix: Arc<CsrMatrix>, blocks: usize) -> Result<Self> {
        let factor = Arc::new(Self::spd_factor(&matrix)?);
        Ok(Weighting::BlockBanded {
            matrix,
            factor,
            blocks,
        })
    }

    pub fn from_factor(matrix: Arc<CsrMatrix>, factor: Arc<BandCholesky>, blocks: usize) -> Self {
        if blocks == 1 {
            Weighting::Banded { matrix, factor }
        } else {
            Weighting::BlockBanded {
                matrix,
                factor,
                blocks,
            }
        }
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        let chol = matrix
            .clone()
            .cholesky()
            .ok_or_else(|| Error::config("POD weighting matrix is not symmetric positive definite"))?;
        Ok(Weighting::Dense {
            lower: chol.l(),
            matrix,
        })
    }

    fn spd_factor(matrix: &CsrMatrix) -> Result<BandCholesky> {
        BandCholesky::factor(matrix).map_err(|e| {
            Error::config(format!(
                "POD weighting matrix is not symmetric positive definite ({e})"
            ))
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Weighting::Scaled { dim, .. } => *dim,
            Weighting::Diagonal(d) => d.len(),
            Weighting::Banded { factor, .. } => factor.dim(),
            Weighting::BlockBanded { factor, blocks, .. } => factor.dim() * blocks,
            Weighting::Dense { matrix, .. } => matrix.nrows(),
        }
    }

    fn for_each_block(&self, x: &mut [f64], f: impl Fn(&BandCholesky, &mut [f64])) {
        match self {
            Weighting::Banded { factor, .. } => f(factor, x),
            Weighting::BlockBanded { factor, .. } => {
                for chunk in x.chunks_mut(factor.dim()) {
                    f(factor, chunk);
                }
            }
            _ => unreachable!(),
        }
    }

    /// Columns of X replaced by S̃ x.
    pub fn apply_factor(&self, x: &mut DMatrix<f64>) {
        match self {
            Weighting::Scaled { c, .. } => *x *= c.sqrt(),
            Weighting::Diagonal(d) => {
                for mut col in x.column_iter_mut() {
                    for (v, w) in col.iter_mut().zip(d) {
                        *v *= w.sqrt();
                    }
                }
            }
            Weighting::Banded { .. } | Weighting::BlockBanded { .. } => {
                for mut col in x.column_iter_mut() {
                    let s = col.as_mut_slice();
                    self.for_each_block(s, |fac, blk| {
                        let y = fac.mul_upper(blk);
                        blk.copy_from_slice(&y);
                    });
                }
            }
            Weighting::Dense { lower, .. } => *x = lower.transpose() * &*x,
        }
    }

    /// Columns of X replaced by S̃⁻¹ x.
    pub fn solve_factor(&self, x: &mut DMatrix<f64>) {
        match self {
            Weighting::Scaled { c, .. } => *x /= c.sqrt(),
            Weighting::Diagonal(d) => {
                for mut col in x.column_iter_mut() {
                    for (v, w) in col.iter_mut().zip(d) {
                        *v /= w.sqrt();
                    }
                }
            }
            Weighting::Banded { .. } | Weighting::BlockBanded { .. } => {
                for mut col in x.column_iter_mut() {
                    self.for_each_block(col.as_mut_slice(), |fac, blk| fac.solve_upper_in_place(blk));
                }
            }
            Weighting::Dense { lower, .. } => {
                let ut = lower.transpose();
                *x = ut.solve_upper_triangular(x).expect("factor is nonsingular");
            }
        }
    }

    /// X W̃ᵀ, i.e. the weighting applied to the columns' index.
    pub fn apply_factor_right(&self, x: &mut DMatrix<f64>) {
        match self {
            Weighting::Scaled { c, .. } => *x *= c.sqrt(),
            Weighting::Diagonal(d) => {
                for (j, mut col) in x.column_iter_mut().enumerate() {
                    col *= d[j].sqrt();
                }
            }
            _ => {
                let mut t = x.transpose();
                self.apply_factor(&mut t);
                *x = t.transpose();
            }
        }
    }

    /// S x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Weighting::Scaled { c, .. } => x.iter().map(|v| c * v).collect(),
            Weighting::Diagonal(d) => x.iter().zip(d).map(|(v, w)| v * w).collect(),
            Weighting::Banded { matrix, .. } => matrix.mul_vec(x),
            Weighting::BlockBanded { matrix, .. } => x
                .chunks(matrix.n_rows())
                .flat_map(|blk| matrix.mul_vec(blk))
                .collect(),
            Weighting::Dense { matrix, .. } => (matrix * nalgebra::DVector::from_column_slice(x))
                .as_slice()
                .to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PodBasis {
    /// M × R_max, S-orthonormal columns.
    pub phi: DMatrix<f64>,
    /// σ_1 ≥ … ≥ σ_{R_max}, restricted to the numerical rank.
    pub singular_values: Vec<f64>,
    /// Every singular value of the weighted snapshot matrix.
    pub all_singular_values: Vec<f64>,
}

impl PodBasis {
    pub fn r_max(&self) -> usize {
        self.phi.ncols()
    }

    /// The leading R columns.
    pub fn leading(&self, r: usize) -> Result<DMatrix<f64>> {
        if r > self.r_max() {
            return Err(Error::Index {
                index: r,
                valid: format!("0..={}", self.r_max()),
            });
        }
        Ok(self.phi.columns(0, r).clone_owned())
    }
}

fn check_dims(u: &DMatrix<f64>, s: &Weighting, w: &Weighting) -> Result<()> {
    if s.dim() != u.nrows() {
        return Err(Error::Dimension {
            context: "POD spatial weighting",
            expected: u.nrows(),
            actual: s.dim(),
        });
    }
    if w.dim() != u.ncols() {
        return Err(Error::Dimension {
            context: "POD snapshot weighting",
            expected: u.ncols(),
            actual: w.dim(),
        });
    }
    Ok(())
}

/// S̃ U W̃ᵀ.
pub fn weighted_snapshots(u: &DMatrix<f64>, s: &Weighting, w: &Weighting) -> Result<DMatrix<f64>> {
    check_dims(u, s, w)?;
    let mut x = u.clone();
    s.apply_factor(&mut x);
    w.apply_factor_right(&mut x);
    Ok(x)
}

/// POD of the snapshot columns of U. The basis is truncated to the numerical
/// rank of S̃ U W̃ᵀ; columns are signed so their largest entry is positive.
pub fn compute_pod(u: &DMatrix<f64>, s: &Weighting, w: &Weighting) -> Result<PodBasis> {
    if u.ncols() == 0 {
        return Err(Error::config("POD needs at least one snapshot"));
    }
    let weighted = weighted_snapshots(u, s, w)?;
    pod_of_weighted(&weighted, s)
}

/// POD from an already weighted snapshot matrix S̃ U W̃ᵀ.
pub fn pod_of_weighted(weighted: &DMatrix<f64>, s: &Weighting) -> Result<PodBasis> {
    let svd = left_singular_vectors(weighted)?;
    let rank = numerical_rank(&svd.sigma, weighted.nrows(), weighted.ncols());
    let mut phi = svd.u.columns(0, rank).clone_owned();
    s.solve_factor(&mut phi);
    fix_column_signs(&mut phi);
    Ok(PodBasis {
        phi,
        singular_values: svd.sigma[..rank].to_vec(),
        all_singular_values: svd.sigma,
    })
}

/// W-weighted mean-square S-norm error of projecting the snapshots onto
/// span(Φ_1..Φ_R), formed from the explicit projection residual.
pub fn projection_error(
    u: &DMatrix<f64>,
    s: &Weighting,
    w: &Weighting,
    basis: &PodBasis,
    r: usize,
) -> Result<f64> {
    let phi_r = basis.leading(r)?;
    let weighted = weighted_snapshots(u, s, w)?;
    let mut phi_t = phi_r;
    s.apply_factor(&mut phi_t);
    let coeff = phi_t.transpose() * &weighted;
    let residual = weighted - phi_t * coeff;
    Ok(residual.norm_squared())
}

/// Projection errors for every R = 0..=R_max from one weighted snapshot
/// matrix: the squared norms of the coefficient rows beyond R plus the part
/// of the snapshots outside the full basis.
pub fn projection_errors_all(weighted: &DMatrix<f64>, s: &Weighting, basis: &PodBasis) -> Vec<f64> {
    let mut phi_t = basis.phi.clone();
    s.apply_factor(&mut phi_t);
    let coeff = phi_t.transpose() * weighted;
    let complement = (weighted - &phi_t * &coeff).norm_squared();
    let rows: Vec<f64> = coeff.row_iter().map(|r| r.norm_squared()).collect();
    let mut out = vec![0.0; rows.len() + 1];
    let mut acc = complement;
    for r in (0..=rows.len()).rev() {
        out[r] = acc;
        if r > 0 {
            acc += rows[r - 1];
        }
    }
    out
}

/// Largest deviation |e(R) − Σ_{r>R} σ_r²| over R, relative to the total
/// weighted snapshot energy ‖S̃ U W̃ᵀ‖²_F.
pub fn optimality_defect(weighted: &DMatrix<f64>, s: &Weighting, basis: &PodBasis) -> f64 {
    let errors = projection_errors_all(weighted, s, basis);
    let total = weighted.norm_squared();
    if total == 0.0 {
        return 0.0;
    }
    let sq: Vec<f64> = basis.all_singular_values.iter().map(|v| v * v).collect();
    errors
        .iter()
        .enumerate()
        .map(|(r, e)| (e - sq[r.min(sq.len())..].iter().sum::<f64>()).abs() / total)
        .fold(0.0, f64::max)
}

/// Largest entry of |ΦᵀSΦ − I|.
pub fn orthonormality_defect(basis: &PodBasis, s: &Weighting) -> f64 {
    let r = basis.r_max();
    let mut worst = 0.0f64;
    for j in 0..r {
        let sphi = s.apply(basis.phi.column(j).as_slice());
        for i in 0..r {
            let v: f64 = basis.phi.column(i).iter().zip(&sphi).map(|(a, b)| a * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}
