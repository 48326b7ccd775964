//! Learner checkpoint directory: `manifest.json` plus one module directory
//! per trained task (`task_001/`, `task_002/`, ...).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{LearnerState, TrainConfig};
use crate::cvae::CvaeModule;
use crate::data::{FeatureDataset, TaskSpec};
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerManifest {
    pub dtype: String,
    pub seed: u64,
    pub dataset: String,
    pub tasks: Vec<Vec<usize>>,
    pub tasks_trained: usize,
    pub module_checksums: Vec<String>,
    pub config: TrainConfig,
}

pub fn module_dir(root: &Path, task: usize) -> PathBuf {
    root.join(format!("task_{task:03}"))
}

impl LearnerManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

impl<T: Scalar> LearnerState<T> {
    pub fn manifest(&self) -> LearnerManifest {
        LearnerManifest {
            dtype: T::DTYPE.to_string(),
            seed: self.config.seed,
            dataset: self.dataset.name().to_string(),
            tasks: self.spec.tasks().to_vec(),
            tasks_trained: self.tasks_trained(),
            module_checksums: self.modules.iter().map(CvaeModule::checksum).collect(),
            config: self.config.clone(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for m in &self.modules {
            m.save(&module_dir(dir, m.task_id()))?;
        }
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_vec_pretty(&self.manifest())?)
            .map_err(|e| Error::io(path, e))
    }

    /// Restores a saved learner. Module checksums must match the manifest.
    pub fn load(dir: &Path, dataset: Arc<FeatureDataset>) -> Result<Self> {
        let manifest = LearnerManifest::read(dir)?;
        if manifest.dtype != T::DTYPE {
            return Err(Error::invalid(format!(
                "checkpoint holds {} parameters, requested {}",
                manifest.dtype,
                T::DTYPE
            )));
        }
        let spec = TaskSpec::new(manifest.tasks.clone(), dataset.num_classes())?;
        let mut modules = Vec::with_capacity(manifest.tasks_trained);
        for t in 1..=manifest.tasks_trained {
            let m = CvaeModule::<T>::load(&module_dir(dir, t))?;
            if manifest.module_checksums.get(t - 1) != Some(&m.checksum()) {
                return Err(Error::Format {
                    file: module_dir(dir, t),
                    message: "module checksum does not match the manifest".into(),
                });
            }
            modules.push(m);
        }
        LearnerState::with_modules(dataset, spec, manifest.config, modules)
    }
}
