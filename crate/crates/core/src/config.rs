//! Study configuration: a JSON document with three blocks (model,
//! discretization, run). Unknown keys are rejected; every field has a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FieldParameters;
use crate::stochastic::draw_parameter_points;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kappa0: f64,
    pub sigma: f64,
    pub correlation_length: f64,
    /// Number of KL modes K.
    pub kl_modes: usize,
    /// Spatial domain as [[x_min, x_max], [y_min, y_max]].
    pub domain: [[f64; 2]; 2],
    /// Parameter box P as [lower, upper] corners.
    pub parameter_lower: [f64; 2],
    pub parameter_upper: [f64; 2],
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kappa0: -1000.0,
            sigma: 200.0,
            correlation_length: 1.0,
            kl_modes: 5,
            domain: [[-0.5, 0.5], [-0.5, 0.5]],
            parameter_lower: [-200.0, -200.0],
            parameter_upper: [200.0, 200.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub n_cells: usize,
    pub n_xi: usize,
    pub sg_degree: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            n_cells: 32,
            n_xi: 16384,
            sg_degree: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationConfig {
    /// Cells per side of the uniform triangulation.
    pub n_cells: usize,
    pub n_xi: usize,
    /// Total polynomial degree per variable of the SG basis.
    pub sg_degree: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub sample_seed: u64,
    pub train_seed: u64,
    pub test_seed: u64,
    /// Reduced dimension used to build the MCRB dual 2–4 snapshots.
    pub dual_snapshot_rank: usize,
    /// Use only the first this many MC samples for MCRB snapshots.
    pub snapshot_samples: Option<usize>,
    pub reference: ReferenceConfig,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig {
            n_cells: 16,
            n_xi: 1024,
            sg_degree: 2,
            n_train: 64,
            n_test: 64,
            sample_seed: 20_250_101,
            train_seed: 1,
            test_seed: 2,
            dual_snapshot_rank: 64,
            snapshot_samples: None,
            reference: ReferenceConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub r_list: Vec<usize>,
    /// Explicit test points; when absent they are drawn with `test_seed`.
    pub test_mu: Option<Vec<[f64; 2]>>,
    pub output_dir: String,
    /// Check POD optimality and orthonormality while building the models.
    pub verify_pods: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            r_list: vec![1, 2, 4, 8, 16, 32, 64],
            test_mu: None,
            output_dir: "out".into(),
            verify_pods: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub model: ModelConfig,
    pub discretization: DiscretizationConfig,
    pub run: RunConfig,
}

impl StudyConfig {
    /// Scaled-down configuration for smoke runs and the validation suite.
    pub fn quick() -> Self {
        let mut c = StudyConfig::default();
        c.discretization.n_cells = 8;
        c.discretization.n_xi = 64;
        c.discretization.n_train = 8;
        c.discretization.n_test = 8;
        c.discretization.dual_snapshot_rank = 16;
        c.discretization.reference = ReferenceConfig {
            n_cells: 16,
            n_xi: 1024,
            sg_degree: 3,
        };
        c.run.r_list = vec![1, 2, 4, 8, 16];
        c.run.output_dir = "out-quick".into();
        c.run.verify_pods = true;
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: StudyConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid configuration: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let d = &self.discretization;
        if m.domain != ModelConfig::default().domain {
            return Err(Error::config(format!(
                "only the domain [[-0.5, 0.5], [-0.5, 0.5]] is supported, got {:?}",
                m.domain
            )));
        }
        if !(m.correlation_length > 0.0) {
            return Err(Error::config("correlation_length must be positive"));
        }
        if m.kl_modes == 0 {
            return Err(Error::config("kl_modes must be positive"));
        }
        if !m.sigma.is_finite() || !m.kappa0.is_finite() || m.sigma < 0.0 {
            return Err(Error::config("kappa0 must be finite and sigma finite and nonnegative"));
        }
        if m.parameter_lower.iter().zip(&m.parameter_upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::config("parameter_lower must not exceed parameter_upper"));
        }
        for (name, n) in [("n_cells", d.n_cells), ("reference.n_cells", d.reference.n_cells)] {
            if n < 2 || n % 2 != 0 {
                return Err(Error::config(format!("{name} must be even and at least 2, got {n}")));
            }
        }
        if d.n_xi < 2 || d.reference.n_xi < 2 {
            return Err(Error::config("n_xi must be at least 2"));
        }
        if d.n_train == 0 || d.n_test == 0 {
            return Err(Error::config("n_train and n_test must be positive"));
        }
        if d.dual_snapshot_rank == 0 {
            return Err(Error::config("dual_snapshot_rank must be positive"));
        }
        if matches!(d.snapshot_samples, Some(s) if s < 2) {
            return Err(Error::config("snapshot_samples must be at least 2"));
        }
        if self.run.r_list.is_empty() || self.run.r_list.contains(&0) {
            return Err(Error::config("r_list must be nonempty with positive entries"));
        }
        if let Some(t) = &self.run.test_mu {
            if t.is_empty() {
                return Err(Error::config("test_mu must not be empty when given"));
            }
        }
        Ok(())
    }

    pub fn field_parameters(&self) -> FieldParameters {
        FieldParameters {
            kappa0: self.model.kappa0,
            sigma: self.model.sigma,
            correlation_length: self.model.correlation_length,
            k: self.model.kl_modes,
        }
    }

    pub fn train_points(&self) -> Result<Vec<[f64; 2]>> {
        let d = &self.discretization;
        draw_parameter_points(d.n_train, self.model.parameter_lower, self.model.parameter_upper, d.train_seed)
    }

    pub fn test_points(&self) -> Result<Vec<[f64; 2]>> {
        if let Some(t) = &self.run.test_mu {
            return Ok(t.clone());
        }
        let d = &self.discretization;
        draw_parameter_points(d.n_test, self.model.parameter_lower, self.model.parameter_upper, d.test_seed)
    }

    /// Replaces every seed by offsets of `seed`, keeping them distinct.
    pub fn override_seeds(&mut self, seed: u64) {
        let d = &mut self.discretization;
        d.sample_seed = seed;
        d.train_seed = seed.wrapping_add(1);
        d.test_seed = seed.wrapping_add(2);
    }

    pub fn contains(&self, mu: &[f64; 2]) -> bool {
        (0..2).all(|i| self.model.parameter_lower[i] <= mu[i] && mu[i] <= self.model.parameter_upper[i])
    }
}
