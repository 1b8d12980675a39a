//! Thin SVD of snapshot matrices.
//!
//! Only the left singular vectors are needed by the POD. Wide matrices are
//! first compressed with a chunked (tall-skinny) QR of their transpose, tall
//! ones with a plain thin QR, so the SVD itself always acts on a small square
//! triangular factor.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const TSQR_CHUNK: usize = 2048;

/// Left singular vectors and singular values of a dense matrix.
#[derive(Debug, Clone)]
pub struct LeftSvd {
    /// m × min(m, n), columns ordered by non-increasing singular value.
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
}

/// Upper triangular factor R of a QR factorization of Xᵀ for a wide X,
/// computed over column chunks of X so neither Xᵀ nor a full Q is formed.
fn wide_r_factor(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = x.shape();
    let mut r = DMatrix::<f64>::zeros(0, m);
    let mut start = 0;
    while start < n {
        let rows = TSQR_CHUNK.min(n - start);
        let mut stacked = DMatrix::<f64>::zeros(r.nrows() + rows, m);
        stacked.rows_mut(0, r.nrows()).copy_from(&r);
        stacked
            .rows_mut(r.nrows(), rows)
            .copy_from(&x.columns(start, rows).transpose());
        let full = stacked.qr().r();
        let k = full.nrows().min(m);
        r = full.rows(0, k).clone_owned();
        start += rows;
    }
    r
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// SVD of a square matrix by one-sided (Hestenes) Jacobi rotations, which
/// stays accurate when the matrix is close to rank deficient. Returns the
/// left singular vectors and singular values in non-increasing order.
fn sorted_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = a.ncols();
    let mut w = a.clone();
    // Columns at rounding level carry no direction; leave them alone.
    let negligible = (n.max(1) as f64 * f64::EPSILON * a.norm()).powi(2);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = w.column(p);
                    let cq = w.column(q);
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..w.nrows() {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::solver("Jacobi singular value decomposition did not converge"));
    }
    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::<f64>::zeros(w.nrows(), n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        if norms[src] * norms[src] > negligible {
            u.column_mut(dst).copy_from(&(w.column(src) / norms[src]));
        }
        sigma.push(norms[src]);
    }
    complete_orthonormal(&mut u, sigma.iter().take_while(|v| **v * **v > negligible).count());
    Ok((u, sigma))
}

/// Fills columns `filled..` with unit vectors orthogonal to the previous ones.
fn complete_orthonormal(u: &mut DMatrix<f64>, filled: usize) {
    let m = u.nrows();
    let mut next = filled;
    let mut candidate = 0;
    while next < u.ncols() && candidate < m {
        let mut v = nalgebra::DVector::<f64>::zeros(m);
        v[candidate] = 1.0;
        candidate += 1;
        for _ in 0..2 {
            for j in 0..next {
                let d = u.column(j).dot(&v);
                v -= u.column(j) * d;
            }
        }
        let norm = v.norm();
        if norm > 0.5 {
            u.column_mut(next).copy_from(&(v / norm));
            next += 1;
        }
    }
}

/// Flips each column so that its largest-magnitude entry is positive.
pub fn fix_column_signs(u: &mut DMatrix<f64>) {
    for mut col in u.column_iter_mut() {
        let mut pivot = 0.0f64;
        for &v in col.iter() {
            if v.abs() > pivot.abs() {
                pivot = v;
            }
        }
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Thin SVD X = U Σ Vᵀ, returning U (sign-fixed) and Σ.
pub fn left_singular_vectors(x: &DMatrix<f64>) -> Result<LeftSvd> {
    let (m, n) = x.shape();
    if m == 0 || n == 0 {
        return Err(Error::config("SVD of an empty matrix"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::solver("snapshot matrix contains non-finite entries"));
    }
    let (mut u, sigma) = if n > m {
        // Xᵀ = Q R  ⇒  X = Rᵀ Qᵀ, so X and Rᵀ share left singular vectors.
        let r = wide_r_factor(x);
        sorted_svd(&r.transpose())?
    } else {
        let qr = x.clone().qr();
        let (q, r) = qr.unpack();
        let (ur, sigma) = sorted_svd(&r)?;
        (q * ur, sigma)
    };
    fix_column_signs(&mut u);
    Ok(LeftSvd { u, sigma })
}

/// Number of singular values above max(m, n)·ε·σ₁.
pub fn numerical_rank(sigma: &[f64], m: usize, n: usize) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    let tol = (m.max(n) as f64) * f64::EPSILON * top;
    sigma.iter().take_while(|&&s| s > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed;
        DMatrix::from_fn(m, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        })
    }

    fn check_against_nalgebra(x: &DMatrix<f64>) {
        let ours = left_singular_vectors(x).unwrap();
        let mut reference: Vec<f64> = x.clone().svd(false, false).singular_values.iter().copied().collect();
        reference.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in ours.sigma.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12 * reference[0]);
        }
        let k = ours.sigma.len();
        let gram = ours.u.transpose() * &ours.u;
        assert!((gram - DMatrix::identity(k, k)).norm() < 1e-12);
        // U Uᵀ X reproduces X when all singular values are retained.
        let proj = &ours.u * (ours.u.transpose() * x);
        assert!((proj - x).norm() < 1e-12 * x.norm());
    }

    #[test]
    fn wide_matrix_via_chunked_qr() {
        check_against_nalgebra(&pseudo_random(7, 5000, 3));
    }

    #[test]
    fn tall_matrix() {
        check_against_nalgebra(&pseudo_random(300, 9, 5));
    }

    #[test]
    fn diagonal_case_sorted_and_signed() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let svd = left_singular_vectors(&x).unwrap();
        assert_eq!(svd.sigma, vec![2.0, 1.0]);
        assert!((svd.u[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((svd.u[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_of_rank_one_matrix() {
        let a = DMatrix::from_fn(6, 4, |i, j| (i + 1) as f64 * (j + 2) as f64);
        let svd = left_singular_vectors(&a).unwrap();
        assert_eq!(numerical_rank(&svd.sigma, 6, 4), 1);
    }

    #[test]
    fn repeated_column_gives_its_direction() {
        let col = pseudo_random(25, 1, 9).map(|v| v * 3e-3);
        let x = DMatrix::from_columns(&[col.column(0), col.column(0)]);
        let svd = left_singular_vectors(&x).unwrap();
        assert_eq!(numerical_rank(&svd.sigma, 25, 2), 1);
        assert!((svd.sigma[0] - col.norm() * 2f64.sqrt()).abs() < 1e-15);
        let dir = col.column(0) / col.norm();
        assert!((svd.u.column(0).dot(&dir).abs() - 1.0).abs() < 1e-14);
    }
}
