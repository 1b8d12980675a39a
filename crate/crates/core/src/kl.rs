//! Karhunen–Loève expansion of the separable exponential covariance
//! exp(−|x₁−x₁'|/L − |x₂−x₂'|/L) on (−½, ½)².
//!
//! The 1D kernel exp(−|s−t|/L) on (−a, a) has the classical closed form
//! eigenpairs: with c = 1/L, even modes cos(ωs) where c − ω tan(ωa) = 0 and
//! odd modes sin(ωs) where ω + c tan(ωa) = 0, both with λ = 2c/(ω² + c²).

use std::f64::consts::PI;

use crate::error::{Error, Result};

const HALF_WIDTH: f64 = 0.5;
const BRACKET_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// One eigenpair of the 1D exponential kernel on (−½, ½).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kl1dMode {
    pub omega: f64,
    pub lambda_1d: f64,
    pub parity: Parity,
    pub norm_const: f64,
}

impl Kl1dMode {
    /// Unit-L² eigenfunction. Even modes are positive at 0, odd modes
    /// increase through 0.
    pub fn eval(&self, s: f64) -> f64 {
        match self.parity {
            Parity::Even => self.norm_const * (self.omega * s).cos(),
            Parity::Odd => self.norm_const * (self.omega * s).sin(),
        }
    }

    /// Residual of the transcendental equation defining ω, in the
    /// pole-free form c·cos(ωa) − ω·sin(ωa) (even) or ω·cos(ωa) + c·sin(ωa) (odd).
    pub fn residual(&self, correlation_length: f64) -> f64 {
        characteristic(self.parity, self.omega, 1.0 / correlation_length)
    }
}

// The equations multiplied through by cos(ωa): same roots inside each
// bracket, but no poles, so the residual stays at rounding level.
fn characteristic(parity: Parity, omega: f64, c: f64) -> f64 {
    let (s, co) = (omega * HALF_WIDTH).sin_cos();
    match parity {
        Parity::Even => c * co - omega * s,
        Parity::Odd => omega * co + c * s,
    }
}

fn bisect(parity: Parity, c: f64, mut lo: f64, mut hi: f64, branch: usize) -> Result<f64> {
    let mut f_lo = characteristic(parity, lo, c);
    let f_hi = characteristic(parity, hi, c);
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Internal(format!(
            "no sign change while bracketing {parity:?} branch {branch}"
        )));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = characteristic(parity, mid, c);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let f_hi = characteristic(parity, hi, c);
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

/// The `count` largest eigenpairs of exp(−|s−t|/L) on (−½, ½), ordered by
/// decreasing eigenvalue (parities alternate, starting with even).
pub fn solve_covariance_eigenpairs_1d(correlation_length: f64, count: usize) -> Result<Vec<Kl1dMode>> {
    if !(correlation_length > 0.0) || !correlation_length.is_finite() {
        return Err(Error::config(format!(
            "correlation length must be positive and finite, got {correlation_length}"
        )));
    }
    if count == 0 {
        return Err(Error::config("at least one Karhunen-Loeve mode is required"));
    }
    let c = 1.0 / correlation_length;
    let a = HALF_WIDTH;
    let mut modes = Vec::with_capacity(count);
    for idx in 0..count {
        let branch = idx / 2;
        let parity = if idx % 2 == 0 { Parity::Even } else { Parity::Odd };
        // ωa lies in ((m−1)π, (m−1)π + π/2) for even and in the following
        // quarter-periods up to mπ for odd roots.
        let base = branch as f64 * PI / a;
        let (lo, hi) = match parity {
            Parity::Even => (base, base + PI / (2.0 * a)),
            Parity::Odd => (base + PI / (2.0 * a), base + PI / a),
        };
        let omega = bisect(parity, c, lo + BRACKET_EPS, hi - BRACKET_EPS, branch + 1)?;
        let s = (2.0 * omega * a).sin() / (2.0 * omega);
        let sq_norm = match parity {
            Parity::Even => a + s,
            Parity::Odd => a - s,
        };
        modes.push(Kl1dMode {
            omega,
            lambda_1d: 2.0 * c / (omega * omega + c * c),
            parity,
            norm_const: 1.0 / sq_norm.sqrt(),
        });
    }
    Ok(modes)
}

/// A tensor-product mode κ(x) = κ_i(x₁) κ_j(x₂) (1-based 1D indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kl2dMode {
    pub i: usize,
    pub j: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct KlExpansion {
    pub correlation_length: f64,
    pub modes_1d: Vec<Kl1dMode>,
    pub modes_2d: Vec<Kl2dMode>,
}

impl KlExpansion {
    pub fn len(&self) -> usize {
        self.modes_2d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes_2d.is_empty()
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.modes_2d[k].lambda
    }

    /// κ_k(x) for the k-th (0-based) 2D mode.
    pub fn eval_mode(&self, k: usize, x: [f64; 2]) -> f64 {
        let m = self.modes_2d[k];
        self.modes_1d[m.i - 1].eval(x[0]) * self.modes_1d[m.j - 1].eval(x[1])
    }

    /// κ(x; y) = κ₀ + σ Σ_k √λ_k κ_k(x) y_k.
    pub fn eval_field(&self, kappa0: f64, sigma: f64, x: [f64; 2], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (k, yk) in y.iter().enumerate().take(self.len()) {
            acc += self.lambda(k).sqrt() * self.eval_mode(k, x) * yk;
        }
        kappa0 + sigma * acc
    }
}

/// The K largest tensor-product eigenpairs, sorted by non-increasing
/// eigenvalue with ties broken lexicographically on (i, j).
pub fn build_kl_2d(correlation_length: f64, k: usize) -> Result<KlExpansion> {
    // Any pair among the K largest products has both indices ≤ K.
    let modes_1d = solve_covariance_eigenpairs_1d(correlation_length, k)?;
    let mut pairs = Vec::with_capacity(k * k);
    for i in 1..=k {
        for j in 1..=k {
            pairs.push(Kl2dMode {
                i,
                j,
                lambda: modes_1d[i - 1].lambda_1d * modes_1d[j - 1].lambda_1d,
            });
        }
    }
    pairs.sort_by(|p, q| {
        q.lambda
            .total_cmp(&p.lambda)
            .then((p.i, p.j).cmp(&(q.i, q.j)))
    });
    pairs.truncate(k);
    Ok(KlExpansion {
        correlation_length,
        modes_1d,
        modes_2d: pairs,
    })
}

pub fn evaluate_kl_field(kl: &KlExpansion, kappa0: f64, sigma: f64, x: [f64; 2], y: &[f64]) -> f64 {
    kl.eval_field(kappa0, sigma, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_satisfy_their_equations() {
        let modes = solve_covariance_eigenpairs_1d(1.0, 12).unwrap();
        for m in &modes {
            assert!(m.residual(1.0).abs() <= 1e-12, "{m:?}");
        }
        for w in modes.windows(2) {
            assert!(w[0].lambda_1d > w[1].lambda_1d);
            assert_ne!(w[0].parity, w[1].parity);
        }
    }

    #[test]
    fn zero_count_rejected() {
        assert!(solve_covariance_eigenpairs_1d(1.0, 0).unwrap_err().is_config());
        assert!(build_kl_2d(-1.0, 3).is_err());
    }

    #[test]
    fn ties_are_ordered_lexicographically() {
        let kl = build_kl_2d(1.0, 5).unwrap();
        let pairs: Vec<(usize, usize)> = kl.modes_2d.iter().map(|m| (m.i, m.j)).collect();
        assert_eq!(pairs, vec![(1, 1), (1, 2), (2, 1), (1, 3), (3, 1)]);
    }
}
