//! Reduced spaces: a basis together with the projections of the affine
//! operator terms and of the load and output vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pod::PodBasis;

#[derive(Debug, Clone)]
pub struct ReducedSpace {
    /// n × R_max basis matrix.
    pub basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Vᵀ A_q V for every affine term q.
    pub terms: Vec<DMatrix<f64>>,
    pub f_red: Vec<f64>,
    pub l_red: Vec<f64>,
}

impl ReducedSpace {
    /// `applied[q]` must hold A_q V.
    pub fn new(pod: PodBasis, applied: &[DMatrix<f64>], f: &[f64], l: &[f64]) -> Self {
        let basis = pod.phi;
        let vt = basis.transpose();
        let terms = applied.iter().map(|av| &vt * av).collect();
        let f_red = (&vt * DVector::from_column_slice(f)).as_slice().to_vec();
        let l_red = (&vt * DVector::from_column_slice(l)).as_slice().to_vec();
        ReducedSpace {
            basis,
            singular_values: pod.singular_values,
            terms,
            f_red,
            l_red,
        }
    }

    pub fn r_max(&self) -> usize {
        self.basis.ncols()
    }

    /// Dimension actually used when R basis functions are requested.
    pub fn dim(&self, r: usize) -> usize {
        r.min(self.r_max())
    }

    /// Σ θ_q (Vᵀ A_q V) restricted to the leading R × R block, optionally
    /// transposed (for dual problems).
    pub fn assemble(&self, theta: &[f64], r: usize, transpose: bool) -> DMatrix<f64> {
        let r = self.dim(r);
        let mut out = DMatrix::<f64>::zeros(r, r);
        for (t, m) in theta.iter().zip(&self.terms) {
            if *t != 0.0 {
                out += m.view((0, 0), (r, r)) * *t;
            }
        }
        if transpose {
            out.transpose()
        } else {
            out
        }
    }

    /// V c for a coefficient vector of length ≤ R_max.
    pub fn lift(&self, c: &[f64]) -> Vec<f64> {
        let v = self.basis.columns(0, c.len()) * DVector::from_column_slice(c);
        v.as_slice().to_vec()
    }
}

/// Solves a small dense system by LU.
pub fn solve_reduced(a: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let x = a
        .lu()
        .solve(&DVector::from_column_slice(b))
        .ok_or_else(|| Error::solver("singular reduced system"))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::solver("reduced solve produced non-finite values"));
    }
    Ok(x.as_slice().to_vec())
}

pub(crate) fn head(v: &[f64], r: usize) -> &[f64] {
    &v[..r.min(v.len())]
}
