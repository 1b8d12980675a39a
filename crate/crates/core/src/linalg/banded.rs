//! Banded direct factorizations.
//!
//! Finite element matrices on the structured meshes used here have a
//! bandwidth of about √M with natural node ordering, so band LU with partial
//! pivoting and band Cholesky are both fast and exact up to roundoff.

use crate::error::{Error, Result};
use crate::linalg::sparse::CsrMatrix;

/// LU factorization with partial pivoting of a general band matrix, stored
/// in the LAPACK `gbtrf` layout: entry (i, j) of the working array lives at
/// `ab[(kl + ku + i - j) + j * ldab]` with `ldab = 2 kl + ku + 1`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::Dimension {
                context: "band LU of non-square matrix",
                expected: a.n_rows(),
                actual: a.n_cols(),
            });
        }
        let n = a.n_rows();
        let (kl, ku) = a.pattern().bandwidths();
        let ldab = 2 * kl + ku + 1;
        let kv = kl + ku;
        let mut ab = vec![0.0; ldab * n];
        for (i, j, v) in a.triplets() {
            ab[kv + i - j + j * ldab] += v;
        }
        let mut ipiv = vec![0; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0;
            let mut best = ab[col].abs();
            for t in 1..=km {
                let v = ab[col + t].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::solver(format!(
                    "band LU: exactly singular pivot in column {j} of {n}"
                )));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let r1 = kv + j - c + c * ldab;
                    let r2 = kv + j + jp - c + c * ldab;
                    ab.swap(r1, r2);
                }
            }
            if km > 0 {
                let pivot = ab[col];
                for t in 1..=km {
                    ab[col + t] /= pivot;
                }
                for c in j + 1..=ju {
                    let ujc = ab[kv + j - c + c * ldab];
                    if ujc != 0.0 {
                        let base = kv + j - c + c * ldab;
                        for t in 1..=km {
                            ab[base + t] -= ab[col + t] * ujc;
                        }
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            kl,
            ku,
            ldab,
            ab,
            ipiv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.ab[self.kl + self.ku + i - j + j * self.ldab]
    }

    /// Ratio of smallest to largest |U_ii|; a cheap conditioning diagnostic.
    pub fn pivot_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for j in 0..self.n {
            let d = self.at(j, j).abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kv = self.kl + self.ku;
        // L: unit lower, interleaved with row interchanges.
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let col = j * self.ldab + kv;
                for t in 1..=km {
                    b[j + t] -= self.ab[col + t] * bj;
                }
            }
        }
        // U: upper with bandwidth kl + ku.
        for j in (0..n).rev() {
            b[j] /= self.at(j, j);
            let bj = b[j];
            if bj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    b[i] -= self.at(i, j) * bj;
                }
            }
        }
    }

    /// Solves Aᵀ x = b in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kv = self.kl + self.ku;
        // Uᵀ z = b (forward).
        for j in 0..n {
            let lo = j.saturating_sub(kv);
            let mut s = b[j];
            for i in lo..j {
                s -= self.at(i, j) * b[i];
            }
            b[j] = s / self.at(j, j);
        }
        // Lᵀ with interchanges, backward.
        for j in (0..n).rev() {
            let km = self.kl.min(n - 1 - j);
            let col = j * self.ldab + kv;
            let mut s = b[j];
            for t in 1..=km {
                s -= self.ab[col + t] * b[j + t];
            }
            b[j] = s;
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_transpose_in_place(&mut x);
        x
    }
}

/// Cholesky factorization A = L Lᵀ of a symmetric positive definite band
/// matrix. Only the lower band of the input is read.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // row i holds L(i, i-bw ..= i) at l[i * (bw + 1) + (j + bw - i)]
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::Dimension {
                context: "band Cholesky of non-square matrix",
                expected: a.n_rows(),
                actual: a.n_cols(),
            });
        }
        let n = a.n_rows();
        let (kl, ku) = a.pattern().bandwidths();
        let bw = kl.max(ku);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for (i, j, v) in a.triplets() {
            if j <= i {
                l[i * w + j + bw - i] += v;
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = l[i * w + j + bw - i];
                for k in klo..j {
                    s -= l[i * w + k + bw - i] * l[j * w + k + bw - j];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::solver(format!(
                            "band Cholesky: matrix not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + j + bw - i] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bw + 1) + j + self.bw - i]
    }

    /// Solves L y = b in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = b[i];
            for k in lo..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Solves Lᵀ x = y in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        for i in (0..self.n).rev() {
            b[i] /= self.at(i, i);
            let bi = b[i];
            let lo = i.saturating_sub(self.bw);
            for k in lo..i {
                b[k] -= self.at(i, k) * bi;
            }
        }
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        self.solve_lower_in_place(b);
        self.solve_upper_in_place(b);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// y = Lᵀ x, i.e. the upper Cholesky factor applied to x.
    pub fn mul_upper(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for k in lo..=i {
                y[k] += self.at(i, k) * x[i];
            }
        }
        y
    }

    /// Dense copy of the lower factor L.
    pub fn lower_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                m[(i, j)] = self.at(i, j);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> CsrMatrix {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut t = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                t.push((i, j, next()));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn band_lu_matches_dense_solve_with_pivoting() {
        let a = random_band(40, 3, 5, 7);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let lu = BandLu::factor(&a).unwrap();
        let x = lu.solve(&b);
        let xd = a
            .to_dense()
            .lu()
            .solve(&DVector::from_vec(b.clone()))
            .unwrap();
        for (u, v) in x.iter().zip(xd.iter()) {
            assert!((u - v).abs() < 1e-9 * (1.0 + v.abs()), "{u} vs {v}");
        }
        let xt = lu.solve_transpose(&b);
        let xtd = a
            .to_dense()
            .transpose()
            .lu()
            .solve(&DVector::from_vec(b))
            .unwrap();
        for (u, v) in xt.iter().zip(xtd.iter()) {
            assert!((u - v).abs() < 1e-9 * (1.0 + v.abs()), "{u} vs {v}");
        }
    }

    #[test]
    fn band_lu_rejects_singular() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)]);
        assert!(BandLu::factor(&a).is_err());
    }

    #[test]
    fn band_cholesky_solves_spd() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 2 < n {
                t.push((i, i + 2, -1.0));
                t.push((i + 2, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let ch = BandCholesky::factor(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let x = ch.solve(&b);
        let r = a.mul_vec(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12 * v.abs().max(1.0));
        }
        let l = ch.lower_dense();
        let rec: DMatrix<f64> = &l * l.transpose();
        assert!((rec - a.to_dense()).norm() < 1e-12);
        let x = DVector::from_fn(n, |i, _| (i as f64).cos());
        let y = ch.mul_upper(x.as_slice());
        let yd = l.transpose() * &x;
        assert!((DVector::from_vec(y) - yd).norm() < 1e-12);
    }

    #[test]
    fn band_cholesky_rejects_indefinite() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(BandCholesky::factor(&a).is_err());
    }
}
