//! Compressed sparse row matrices.
//!
//! All finite element matrices of one mesh are assembled on the same sparsity
//! pattern, so parameter-dependent operators are formed by combining value
//! arrays without touching the index structure.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row structure shared by matrices assembled on the same mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from (row, col) pairs; duplicates are merged and
    /// columns are sorted within each row.
    pub fn from_entries(n_rows: usize, n_cols: usize, entries: &[(usize, usize)]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_rows];
        for &(i, j) in entries {
            assert!(i < n_rows && j < n_cols, "pattern entry out of bounds");
            rows[i].push(j);
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(&row);
            row_ptr.push(col_idx.len());
        }
        SparsityPattern {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Position of entry (i, j) in the value array, if it is stored.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let end = self.row_ptr[i + 1];
        self.col_idx[start..end]
            .binary_search(&j)
            .ok()
            .map(|k| start + k)
    }

    /// (lower, upper) bandwidth of the stored entries.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n_rows {
            for &j in &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]] {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }
}

/// A real sparse matrix in CSR format with a shareable pattern.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    pub fn from_parts(pattern: Arc<SparsityPattern>, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(Error::Dimension {
                context: "csr values",
                expected: pattern.nnz(),
                actual: values.len(),
            });
        }
        Ok(CsrMatrix { pattern, values })
    }

    /// Builds a matrix from triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let entries: Vec<(usize, usize)> = triplets.iter().map(|&(i, j, _)| (i, j)).collect();
        let pattern = Arc::new(SparsityPattern::from_entries(n_rows, n_cols, &entries));
        let mut m = CsrMatrix::zeros(pattern);
        for &(i, j, v) in triplets {
            m.add_to(i, j, v);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        CsrMatrix::from_triplets(n, n, &triplets)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        CsrMatrix::from_triplets(diag.len(), diag.len(), &triplets)
    }

    /// Keeps every entry of a dense matrix (zeros included) in the pattern.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::with_capacity(a.nrows() * a.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                triplets.push((i, j, a[(i, j)]));
            }
        }
        CsrMatrix::from_triplets(a.nrows(), a.ncols(), &triplets)
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Adds `v` to a stored entry. Panics if (i, j) is not in the pattern.
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Iterates over stored entries as (row, col, value).
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let p = &self.pattern;
        (0..p.n_rows).flat_map(move |i| {
            (p.row_ptr[i]..p.row_ptr[i + 1]).map(move |k| (i, p.col_idx[k], self.values[k]))
        })
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols());
        assert_eq!(y.len(), self.n_rows());
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// y = Aᵀ x
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols()];
        self.tr_mul_vec_into(x, &mut y);
        y
    }

    pub fn tr_mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows());
        assert_eq!(y.len(), self.n_cols());
        y.iter_mut().for_each(|v| *v = 0.0);
        let p = &self.pattern;
        for (i, &xi) in x.iter().enumerate() {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                y[p.col_idx[k]] += self.values[k] * xi;
            }
        }
    }

    /// Dense product A·B for a dense right factor.
    pub fn mul_dense(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.n_cols());
        let mut out = DMatrix::zeros(self.n_rows(), b.ncols());
        for c in 0..b.ncols() {
            let col = self.mul_vec(b.column(c).as_slice());
            out.column_mut(c).copy_from_slice(&col);
        }
        out
    }

    /// Dense product Aᵀ·B for a dense right factor.
    pub fn tr_mul_dense(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.n_rows());
        let mut out = DMatrix::zeros(self.n_cols(), b.ncols());
        for c in 0..b.ncols() {
            let col = self.tr_mul_vec(b.column(c).as_slice());
            out.column_mut(c).copy_from_slice(&col);
        }
        out
    }

    /// Quadratic form xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        ax.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let triplets: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        CsrMatrix::from_triplets(self.n_cols(), self.n_rows(), &triplets)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows(), self.n_cols());
        for (i, j, v) in self.triplets() {
            d[(i, j)] += v;
        }
        d
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Σ cᵢ Aᵢ for matrices that share one pattern.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Result<CsrMatrix> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::Internal("empty linear combination".into()))?;
        let mut out = CsrMatrix::zeros(first.pattern.clone());
        for &(c, m) in terms {
            out.axpy(c, m)?;
        }
        Ok(out)
    }

    /// self += c · other (patterns must coincide).
    pub fn axpy(&mut self, c: f64, other: &CsrMatrix) -> Result<()> {
        if !Arc::ptr_eq(&self.pattern, &other.pattern) && self.pattern != other.pattern {
            return Err(Error::Internal(
                "axpy on matrices with different sparsity patterns".into(),
            ));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> CsrMatrix {
        CsrMatrix {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// ½(A + Aᵀ), on the pattern of A (which must be structurally symmetric).
    pub fn symmetric_part(&self) -> CsrMatrix {
        let values = self
            .triplets()
            .map(|(i, j, v)| 0.5 * (v + self.get(j, i)))
            .collect();
        CsrMatrix {
            pattern: self.pattern.clone(),
            values,
        }
    }

    /// Largest |A_ij − s·A_ji| relative to the largest |A_ij|; `s = 1` measures
    /// symmetry, `s = −1` skew-symmetry.
    pub fn symmetry_defect(&self, s: f64) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        self.triplets()
            .map(|(i, j, v)| (v - s * self.get(j, i)).abs())
            .fold(0.0f64, f64::max)
            / scale
    }
}
