use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seal_core::auditval::Thresholds;
use seal_core::datagen::SimulationParams;
use seal_core::ercd::AugmentConfig;
use seal_core::fedcal::{FLConfig, InterferenceSpec};
use seal_core::governance::{Policy, UserContext};

use crate::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Hyperparameter grid and early stopping for the task model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub max_epochs: usize,
    pub patience: usize,
    pub hidden: Vec<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rates: vec![1e-3, 1e-2],
            batch_sizes: vec![32, 128],
            max_epochs: 12,
            patience: 3,
            hidden: vec![128, 128],
        }
    }
}

/// Who the certified dataset is sealed for. No package is written unless
/// `key_file` names a file holding a 64-character hex key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GovernanceConfig {
    pub key_file: Option<PathBuf>,
    pub key_id: String,
    pub user: UserContext,
    pub policies: Vec<Policy>,
}

impl Default for GovernanceConfig {
    fn default() -> Self {
        Self {
            key_file: None,
            key_id: "seal-run".into(),
            user: UserContext::new("operator", &["auditor"], &[]),
            policies: vec![Policy::certification("certified-only")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Starting generator parameters.
    pub theta: SimulationParams,
    /// Parameters of the emulated field network.
    pub reality: SimulationParams,
    pub interference: InterferenceSpec,
    pub n_samples: usize,
    pub augment: AugmentConfig,
    pub fl: FLConfig,
    pub training: TrainingConfig,
    pub thresholds: Thresholds,
    pub max_loop_iterations: usize,
    pub n_seeds: usize,
    pub output_dir: PathBuf,
    pub governance: GovernanceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let theta = SimulationParams::default();
        let mut reality = theta.clone();
        reality.channel.shadowing_sigma_db = 8.0;
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            theta,
            reality,
            interference: InterferenceSpec::default(),
            n_samples: 10_000,
            augment: AugmentConfig::default(),
            fl: FLConfig::default(),
            training: TrainingConfig::default(),
            thresholds: Thresholds::default(),
            max_loop_iterations: 3,
            n_seeds: 5,
            output_dir: PathBuf::from("seal-out"),
            governance: GovernanceConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return bad(format!("schema_version {} unsupported (expected {CONFIG_SCHEMA_VERSION})", self.schema_version));
        }
        if self.max_loop_iterations == 0 {
            return bad("max_loop_iterations must be >= 1".into());
        }
        if self.n_seeds == 0 {
            return bad("n_seeds must be >= 1".into());
        }
        if self.n_samples < 2 * self.fl.n_clients.max(1) {
            return bad(format!("n_samples {} too small for {} clients", self.n_samples, self.fl.n_clients));
        }
        let t = &self.training;
        if t.learning_rates.is_empty() || t.batch_sizes.is_empty() {
            return bad("training grid must be non-empty".into());
        }
        if t.patience == 0 || t.max_epochs == 0 || t.batch_sizes.contains(&0) {
            return bad("training patience, max_epochs and batch sizes must be >= 1".into());
        }
        if !(self.thresholds.fid_max > 0.0 && self.thresholds.eo_gap_max > 0.0) {
            return bad("thresholds must be positive".into());
        }
        self.theta.validate().map_err(|e| CliError::Config(format!("theta: {e}")))?;
        self.reality.validate().map_err(|e| CliError::Config(format!("reality: {e}")))?;
        self.fl.validate().map_err(|e| CliError::Config(format!("fl: {e}")))?;
        self.fl.free_indices(&self.theta.theta_layout()).map_err(|e| CliError::Config(format!("fl.free: {e}")))?;
        if self.governance.key_id.len() > seal_core::governance::MAX_KEY_ID_LEN {
            return bad("governance.key_id longer than 30 bytes".into());
        }
        Ok(())
    }

    /// Digest of the canonical config; recorded with every run directory
    /// so stages refuse to mix artifacts from different configurations.
    /// The output directory is excluded.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        seal_core::canonical::digest(&c).expect("config serializes")
    }
}
