//! Run configuration: one TOML file holding everything a subcommand needs
//! besides its input files. Explicit flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dose_core::model::{ModelConfig, Sampling};
use dose_core::pipeline::TrainConfig;
use dose_core::CodecConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed. Dataset generation, model initialization, batch order,
    /// dropout and sampling all derive from it.
    pub seed: u64,
    /// Worker thread cap; unset uses every core.
    pub threads: Option<usize>,
    pub codec: CodecConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub dataset: DatasetConfig,
    pub sampling: Sampling,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            threads: None,
            codec: CodecConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            dataset: DatasetConfig::default(),
            sampling: Sampling::Greedy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub library: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub count: usize,
    pub split: String,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig { library: None, out: None, count: 2000, split: "train".to_owned() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }
}
