//! Monte Carlo sample sets and the double-orthogonal polynomial basis for
//! independent uniform variables on [−√3, √3].

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// N_ξ × K samples, stored row-major (sample index outer).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<f64>,
    pub seed: u64,
    pub n_xi: usize,
    pub k: usize,
}

impl SampleSet {
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.k..(i + 1) * self.k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks(self.k)
    }
}

/// Uniform draw in [0, 1) from the top 53 bits of one ChaCha20 output word.
pub(crate) fn unit_uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// i.i.d. uniform samples on [−√3, √3]^K from ChaCha20 (rand_chacha 0.3,
/// `seed_from_u64`), drawn sample by sample, dimension by dimension.
pub fn draw_mc_samples(n_xi: usize, k: usize, seed: u64) -> Result<SampleSet> {
    if n_xi < 2 {
        return Err(Error::config(format!(
            "at least 2 Monte Carlo samples are needed for the variance estimator, got {n_xi}"
        )));
    }
    if k == 0 {
        return Err(Error::config("the random parameter dimension must be positive"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let samples = (0..n_xi * k)
        .map(|_| SQRT3 * (2.0 * unit_uniform(&mut rng) - 1.0))
        .collect();
    Ok(SampleSet { samples, seed, n_xi, k })
}

/// Points drawn uniformly on the box [lo₀, hi₀] × [lo₁, hi₁], used for
/// training and test parameter sets.
pub fn draw_parameter_points(n: usize, lower: [f64; 2], upper: [f64; 2], seed: u64) -> Result<Vec<[f64; 2]>> {
    if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::config(format!(
            "parameter bounds must satisfy lower ≤ upper, got {lower:?} and {upper:?}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let mut p = [0.0; 2];
            for (d, v) in p.iter_mut().enumerate() {
                *v = lower[d] + (upper[d] - lower[d]) * unit_uniform(&mut rng);
            }
            p
        })
        .collect())
}

/// p_n(y) = √(2n+1) P_n(y/√3): orthonormal Legendre polynomials for the
/// uniform density on [−√3, √3]. Returns p_0..p_d.
pub fn normalized_legendre(d: usize, y: f64) -> Vec<f64> {
    let t = y / SQRT3;
    let mut p = vec![0.0; d + 1];
    p[0] = 1.0;
    if d >= 1 {
        p[1] = t;
    }
    for n in 1..d {
        let nf = n as f64;
        p[n + 1] = ((2.0 * nf + 1.0) * t * p[n] - nf * p[n - 1]) / (nf + 1.0);
    }
    for (n, v) in p.iter_mut().enumerate() {
        *v *= ((2 * n + 1) as f64).sqrt();
    }
    p
}

/// Nodes and weights (summing to 1) of the n-point Gauss rule for the
/// uniform density on [−√3, √3], by the Golub–Welsch method.
pub fn gauss_uniform(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = jacobi_matrix(n.saturating_sub(1));
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Matrix of multiplication by y in the orthonormal Legendre basis p_0..p_d.
fn jacobi_matrix(d: usize) -> DMatrix<f64> {
    let mut y = DMatrix::<f64>::zeros(d + 1, d + 1);
    for k in 0..d {
        let kf = k as f64;
        let v = SQRT3 * (kf + 1.0) / ((2.0 * kf + 1.0) * (2.0 * kf + 3.0)).sqrt();
        y[(k, k + 1)] = v;
        y[(k + 1, k)] = v;
    }
    y
}

#[derive(Debug, Clone)]
pub struct DoubleOrthogonalBasis {
    pub degree: usize,
    pub k: usize,
    /// Columns map orthonormal Legendre coefficients to ψ_m.
    pub q: DMatrix<f64>,
    pub diag_values: Vec<f64>,
    pub expectation_weights: Vec<f64>,
    pub multi_indices: Vec<Vec<usize>>,
}

impl DoubleOrthogonalBasis {
    pub fn m_sg(&self) -> usize {
        self.multi_indices.len()
    }

    /// Univariate ψ_m(y).
    pub fn eval_univariate(&self, m: usize, y: f64) -> f64 {
        let p = normalized_legendre(self.degree, y);
        (0..=self.degree).map(|n| self.q[(n, m)] * p[n]).sum()
    }

    /// All univariate ψ_0..ψ_d at y.
    pub fn eval_all_univariate(&self, y: f64) -> Vec<f64> {
        let p = normalized_legendre(self.degree, y);
        (0..=self.degree)
            .map(|m| (0..=self.degree).map(|n| self.q[(n, m)] * p[n]).sum())
            .collect()
    }

    /// Values of every tensor basis function at the point y ∈ ℝ^K.
    pub fn eval_tensor(&self, y: &[f64]) -> Vec<f64> {
        let uni: Vec<Vec<f64>> = y.iter().map(|&yk| self.eval_all_univariate(yk)).collect();
        self.multi_indices
            .iter()
            .map(|mi| mi.iter().enumerate().map(|(k, &m)| uni[k][m]).product())
            .collect()
    }
}

/// Diagonalizes multiplication by y in the degree-d Legendre space and
/// tensorizes the result over K dimensions.
pub fn build_double_orthogonal_basis(d: usize, k: usize) -> Result<DoubleOrthogonalBasis> {
    if k == 0 {
        return Err(Error::config("the random parameter dimension must be positive"));
    }
    let n = d + 1;
    let eig = SymmetricEigen::new(jacobi_matrix(d));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut diag_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        let e = col[0];
        let flip = if e.abs() > 1e-14 {
            e < 0.0
        } else {
            let pivot = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            pivot < 0.0
        };
        if flip {
            col.neg_mut();
        }
        q.column_mut(dst).copy_from(&col);
        diag_values.push(eig.eigenvalues[src]);
    }
    let expectation_weights = (0..n).map(|m| q[(0, m)]).collect();
    let total = n.checked_pow(k as u32).ok_or_else(|| {
        Error::config(format!("stochastic basis size ({n})^{k} overflows"))
    })?;
    let mut multi_indices = Vec::with_capacity(total);
    for j in 0..total {
        let mut mi = vec![0; k];
        let mut rest = j;
        for slot in mi.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        multi_indices.push(mi);
    }
    Ok(DoubleOrthogonalBasis {
        degree: d,
        k,
        q,
        diag_values,
        expectation_weights,
        multi_indices,
    })
}

/// Reaction coefficients (d_{m_1}, …, d_{m_K}) of SG block `mode`.
pub fn sg_mode_reaction_coefficients(basis: &DoubleOrthogonalBasis, mode: usize) -> Result<Vec<f64>> {
    let mi = basis.multi_indices.get(mode).ok_or_else(|| Error::Index {
        index: mode,
        valid: format!("0..{}", basis.m_sg()),
    })?;
    Ok(mi.iter().map(|&m| basis.diag_values[m]).collect())
}

/// E_j = E[Ψ_j] = Π_k e_{j_k}.
pub fn sg_expectation_vector(basis: &DoubleOrthogonalBasis) -> Vec<f64> {
    basis
        .multi_indices
        .iter()
        .map(|mi| mi.iter().map(|&m| basis.expectation_weights[m]).product())
        .collect()
}
