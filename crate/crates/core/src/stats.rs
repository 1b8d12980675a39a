//! Monte Carlo estimators and the estimate/bound record shared by both
//! reduced models.

use serde::Serialize;

use crate::error::{Error, Result};

/// E[g] = mean, E̲[g] = sum/(N−1), V[g] = E̲[g²] − E̲[g]·E[g].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McMoments {
    pub mean: f64,
    pub underline_mean: f64,
    pub variance: f64,
}

pub fn mc_estimators(g: &[f64]) -> Result<McMoments> {
    let n = g.len();
    if n < 2 {
        return Err(Error::config(format!(
            "Monte Carlo estimators need at least 2 samples, got {n}"
        )));
    }
    let sum: f64 = g.iter().sum();
    let sum_sq: f64 = g.iter().map(|v| v * v).sum();
    let mean = sum / n as f64;
    let underline_mean = sum / (n - 1) as f64;
    let variance = sum_sq / (n - 1) as f64 - underline_mean * mean;
    Ok(McMoments {
        mean,
        underline_mean,
        variance,
    })
}

/// A reduced-order statistic: the plain estimate, its residual-corrected
/// version and a bound on the corrected estimate's error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub corrected_value: f64,
    pub bound: f64,
    /// Named contributions whose sum is `bound`.
    pub components: Vec<(String, f64)>,
}

impl McEstimate {
    pub fn new(value: f64, corrected_value: f64, components: Vec<(String, f64)>) -> Self {
        let bound = components.iter().map(|(_, v)| v).sum();
        McEstimate {
            value,
            corrected_value,
            bound,
            components,
        }
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let m = mc_estimators(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((m.mean, m.underline_mean, m.variance), (2.0, 3.0, 1.0));
    }

    #[test]
    fn constant_and_shift() {
        let m = mc_estimators(&[4.5; 10]).unwrap();
        assert_eq!(m.mean, 4.5);
        assert!(m.variance.abs() < 1e-13);
        let g = [0.3, -1.2, 2.2, 0.9];
        let shifted: Vec<f64> = g.iter().map(|v| v + 7.0).collect();
        let a = mc_estimators(&g).unwrap().variance;
        let b = mc_estimators(&shifted).unwrap().variance;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn single_sample_rejected() {
        assert!(mc_estimators(&[1.0]).unwrap_err().is_config());
    }
}
