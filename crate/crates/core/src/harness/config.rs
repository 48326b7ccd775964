use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::SyntheticSpec;
use crate::learner::TrainConfig;
use crate::{Error, Result};

pub const DEFAULT_REPLAY_SWEEP: [usize; 7] = [0, 10, 20, 30, 40, 50, 60];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    pub attr_dim: usize,
    pub feature_dim: usize,
    pub samples_per_class: usize,
    pub cluster_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_classes: 16,
            attr_dim: 8,
            feature_dim: 32,
            samples_per_class: 60,
            cluster_noise: 0.3,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn spec(&self) -> SyntheticSpec {
        SyntheticSpec::with_random_map(
            self.num_classes,
            self.attr_dim,
            self.feature_dim,
            self.samples_per_class,
            self.cluster_noise,
            self.seed,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Dataset container directory.
    Path(PathBuf),
    Synthetic(SyntheticConfig),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Defaults to `tasks.json` of the container, then to the usual split of
    /// a recognised benchmark.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_tasks: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub save_checkpoints: bool,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default = "default_sweep")]
    pub replay_sweep: Vec<usize>,
    #[serde(default)]
    pub train: TrainConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_true() -> bool {
    true
}

fn default_sweep() -> Vec<usize> {
    DEFAULT_REPLAY_SWEEP.to_vec()
}

impl ExperimentConfig {
    pub fn new(data: DataSource) -> Self {
        ExperimentConfig {
            data,
            num_tasks: None,
            seeds: default_seeds(),
            output_dir: None,
            save_checkpoints: true,
            precision: Precision::default(),
            replay_sweep: default_sweep(),
            train: TrainConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if matches!(self.num_tasks, Some(t) if t < 2) {
            return Err(Error::Config("num_tasks must be at least 2".into()));
        }
        self.train.validate()
    }
}
