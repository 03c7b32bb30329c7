use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cascade_core::benders::Variant;
use cascade_core::model::GenerationConfig;
use serde::{Deserialize, Serialize};

/// Experiment settings read from `--config`; command-line flags override
/// individual fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: Option<PathBuf>,
    pub generate: Option<GenerationConfig>,
    pub np: Option<usize>,
    pub nc: Option<usize>,
    pub epsilon: Option<f64>,
    pub variant: Option<Variant>,
    pub pool_size: Option<usize>,
    pub time_limit_s: Option<f64>,
    pub max_iterations: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("malformed config {}", path.display()))?;
        if cfg.network.is_some() && cfg.generate.is_some() {
            bail!(
                "config {}: give either `network` or `generate`, not both",
                path.display()
            );
        }
        Ok(cfg)
    }
}
