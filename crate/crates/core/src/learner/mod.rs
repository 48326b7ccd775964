//! Task-by-task training: one conditional VAE per task, replay from the
//! frozen module that owns each earlier class, and synthesis of the
//! classifier training set for seen and unseen classes.

mod checkpoint;
mod objective;

pub use checkpoint::LearnerManifest;
pub use objective::{total_loss, LossBreakdown, LossWeights};

use std::sync::Arc;

use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classifier::AccuracyMode;
use crate::cvae::{embedding_row, Batch, CvaeDims, CvaeModule, HiddenDims};
use crate::data::{FeatureDataset, TaskSpec, TaskView};
use crate::nn::{Activation, AdamConfig, AdamState};
use crate::seed::{self, stream};
use crate::{Error, Result, Scalar};

/// Which module generates the classifier features of already seen classes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeenSource {
    /// The newest module, which has seen earlier classes through replay.
    #[default]
    Newest,
    /// The frozen module of the task that introduced the class.
    Owner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub classifier_epochs: usize,
    pub lr: f64,
    pub classifier_lr: f64,
    pub n_replay_per_class: usize,
    pub n_classifier_per_class: usize,
    pub z_dim: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    /// When false, λ3 and λ4 are treated as zero.
    pub use_aux_losses: bool,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden: HiddenDims,
    pub classifier_hidden: usize,
    pub classifier_activation: Activation,
    pub accuracy: AccuracyMode,
    pub seen_source: SeenSource,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 101,
            classifier_epochs: 25,
            lr: 1e-4,
            classifier_lr: 1e-4,
            n_replay_per_class: 50,
            n_classifier_per_class: 150,
            z_dim: 50,
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            lambda4: 1.0,
            use_aux_losses: true,
            batch_size: 64,
            seed: 0,
            hidden: HiddenDims::default(),
            classifier_hidden: 512,
            classifier_activation: Activation::Relu,
            accuracy: AccuracyMode::PerClass,
            seen_source: SeenSource::Newest,
        }
    }
}

impl TrainConfig {
    pub fn loss_weights(&self) -> LossWeights {
        let aux = if self.use_aux_losses { 1.0 } else { 0.0 };
        LossWeights {
            task: self.lambda1,
            vae: self.lambda2,
            label: self.lambda3 * aux,
            embedding: self.lambda4 * aux,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("epochs", self.epochs),
            ("classifier_epochs", self.classifier_epochs),
            ("n_classifier_per_class", self.n_classifier_per_class),
            ("z_dim", self.z_dim),
            ("batch_size", self.batch_size),
            ("classifier_hidden", self.classifier_hidden),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(self.lr > 0.0 && self.classifier_lr > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        let raw = LossWeights {
            task: self.lambda1,
            vae: self.lambda2,
            label: self.lambda3,
            embedding: self.lambda4,
        };
        if !raw.is_valid() {
            return Err(Error::Config(
                "loss weights must be finite and non-negative".into(),
            ));
        }
        let hidden = [&self.hidden.encoder, &self.hidden.decoder, &self.hidden.aux];
        if hidden.iter().any(|h| h.contains(&0)) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        Ok(())
    }
}

/// Generated `(feature, label, embedding)` rows for previously seen classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer<T> {
    pub features: Array2<T>,
    pub labels: Vec<usize>,
    pub embeddings: Array2<T>,
}

impl<T: Scalar> ReplayBuffer<T> {
    fn empty(feature_dim: usize, attr_dim: usize) -> Self {
        ReplayBuffer {
            features: Array2::zeros((0, feature_dim)),
            labels: Vec::new(),
            embeddings: Array2::zeros((0, attr_dim)),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Features with labels, e.g. the synthetic classifier training set.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet<T> {
    pub features: Array2<T>,
    pub labels: Vec<usize>,
}

impl<T> LabeledSet<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskTrainingLog {
    pub task: usize,
    pub real_rows: usize,
    pub replay_rows: usize,
    /// Row-weighted mean of the total objective per epoch.
    pub epoch_losses: Vec<f64>,
    pub last_epoch: LossBreakdown,
}

/// The growing list of per-task modules plus the data and configuration
/// they are trained with. Every module except the one being trained is frozen.
#[derive(Clone, Debug)]
pub struct LearnerState<T> {
    modules: Vec<CvaeModule<T>>,
    dataset: Arc<FeatureDataset>,
    spec: TaskSpec,
    config: TrainConfig,
}

impl<T: Scalar> LearnerState<T> {
    pub fn new(dataset: Arc<FeatureDataset>, spec: TaskSpec, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if spec.num_classes() != dataset.num_classes() {
            return Err(Error::invalid(format!(
                "task spec covers {} classes, dataset has {}",
                spec.num_classes(),
                dataset.num_classes()
            )));
        }
        Ok(LearnerState {
            modules: Vec::new(),
            dataset,
            spec,
            config,
        })
    }

    /// Restores a state from already trained (frozen) modules.
    pub fn with_modules(
        dataset: Arc<FeatureDataset>,
        spec: TaskSpec,
        config: TrainConfig,
        modules: Vec<CvaeModule<T>>,
    ) -> Result<Self> {
        let mut state = LearnerState::new(dataset, spec, config)?;
        for (i, m) in modules.iter().enumerate() {
            if m.task_id() != i + 1 || !m.is_frozen() {
                return Err(Error::invalid(format!(
                    "module {} must be the frozen module of task {}",
                    m.task_id(),
                    i + 1
                )));
            }
            if m.owned_classes() != state.spec.classes_of(i + 1) {
                return Err(Error::invalid(format!(
                    "module {} owns the wrong classes",
                    i + 1
                )));
            }
        }
        if modules.len() > state.spec.num_tasks() {
            return Err(Error::invalid("more modules than tasks"));
        }
        state.modules = modules;
        Ok(state)
    }

    pub fn tasks_trained(&self) -> usize {
        self.modules.len()
    }

    pub fn modules(&self) -> &[CvaeModule<T>] {
        &self.modules
    }

    pub fn dataset(&self) -> &FeatureDataset {
        &self.dataset
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn dims(&self) -> CvaeDims {
        CvaeDims {
            feature_dim: self.dataset.feature_dim(),
            attr_dim: self.dataset.attr_dim(),
            num_classes: self.dataset.num_classes(),
            z_dim: self.config.z_dim,
        }
    }

    fn seen_classes(&self, t: usize) -> Vec<usize> {
        (1..=t)
            .flat_map(|k| self.spec.classes_of(k).iter().copied())
            .collect()
    }

    fn generate_class(
        &self,
        module: &CvaeModule<T>,
        class: usize,
        n: usize,
        seed: u64,
    ) -> Result<Array2<T>> {
        let e = embedding_row::<T>(self.dataset.attributes(), class);
        module.generate(e.view(), n, seed::derive(seed, &[class as u64]))
    }

    /// `n_per_class` samples for every class of the trained tasks, each drawn
    /// from the module of the task that introduced it. Empty before task 1.
    pub fn build_replay(&self, n_per_class: usize, seed: u64) -> Result<ReplayBuffer<T>> {
        let (d, a) = (self.dataset.feature_dim(), self.dataset.attr_dim());
        let classes = self.seen_classes(self.tasks_trained());
        if n_per_class == 0 || classes.is_empty() {
            return Ok(ReplayBuffer::empty(d, a));
        }
        let mut blocks = Vec::with_capacity(classes.len());
        for &c in &classes {
            let owner = &self.modules[self.spec.owner_of(c) - 1];
            blocks.push(self.generate_class(owner, c, n_per_class, seed)?);
        }
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        let labels: Vec<usize> = classes
            .iter()
            .flat_map(|&c| std::iter::repeat_n(c, n_per_class))
            .collect();
        Ok(ReplayBuffer {
            features: concatenate(Axis(0), &views).map_err(|e| Error::shape(e.to_string()))?,
            embeddings: self.dataset.embeddings_for(&labels),
            labels,
        })
    }

    /// Trains a fresh module on the task's real samples plus replay, then
    /// freezes and appends it.
    pub fn train_task(&mut self, task: &TaskView) -> Result<TaskTrainingLog> {
        let t = task.task_index;
        self.train_task_inner(task).map_err(|e| e.in_task(t))
    }

    fn train_task_inner(&mut self, task: &TaskView) -> Result<TaskTrainingLog> {
        let t = task.task_index;
        if t != self.tasks_trained() + 1 {
            return Err(Error::invalid(format!(
                "expected task {}, got task {t}",
                self.tasks_trained() + 1
            )));
        }
        if t > self.spec.num_tasks() || task.classes != self.spec.classes_of(t) {
            return Err(Error::invalid("task view does not match the task spec"));
        }
        if task.train_indices.is_empty() {
            return Err(Error::invalid("task has no training samples"));
        }
        let cfg = self.config.clone();
        let base = cfg.seed;

        let replay = self.build_replay(
            cfg.n_replay_per_class,
            seed::derive(base, &[stream::REPLAY, t as u64]),
        )?;
        let real_x: Array2<T> = self.dataset.train_rows(&task.train_indices);
        let real_labels: Vec<usize> = task
            .train_indices
            .iter()
            .map(|&i| self.dataset.labels_train()[i])
            .collect();
        let real_e: Array2<T> = self.dataset.embeddings_for(&real_labels);

        let x = concatenate(Axis(0), &[real_x.view(), replay.features.view()])
            .map_err(|e| Error::shape(e.to_string()))?;
        let e = concatenate(Axis(0), &[real_e.view(), replay.embeddings.view()])
            .map_err(|e| Error::shape(e.to_string()))?;
        let mut labels = real_labels;
        labels.extend_from_slice(&replay.labels);
        let active = self.seen_classes(t);

        let mut module = CvaeModule::new(
            t,
            task.classes.clone(),
            self.dims(),
            &cfg.hidden,
            seed::derive(base, &[stream::MODULE_INIT, t as u64]),
        )?;
        let adam = AdamConfig::with_lr(cfg.lr);
        let mut optim = [
            AdamState::new(module.encoder(), adam),
            AdamState::new(module.decoder(), adam),
            AdamState::new(module.aux(), adam),
        ];
        let weights = cfg.loss_weights();
        let mut rng = seed::rng(seed::derive(base, &[stream::TRAIN_SHUFFLE, t as u64]));
        let rows = labels.len();
        let mut order: Vec<usize> = (0..rows).collect();
        let mut epoch_losses = Vec::with_capacity(cfg.epochs);
        let mut last_epoch = LossBreakdown::default();

        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut sums = LossBreakdown::default();
            for chunk in order.chunks(cfg.batch_size) {
                let bx = x.select(Axis(0), chunk);
                let be = e.select(Axis(0), chunk);
                let bl: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
                let noise = Array2::from_shape_simple_fn((chunk.len(), cfg.z_dim), || {
                    T::of(rng.sample::<f64, _>(StandardNormal))
                });
                let batch = Batch {
                    x: bx.view(),
                    labels: &bl,
                    e: be.view(),
                };
                let (l, grads) =
                    module.loss_and_gradients(&batch, noise.view(), &active, &weights)?;
                module.apply_update(&grads, &mut optim)?;
                let n = chunk.len() as f64;
                sums.l_task += l.l_task * n;
                sums.l_recon += l.l_recon * n;
                sums.l_kl += l.l_kl * n;
                sums.l_vae += l.l_vae * n;
                sums.l_y += l.l_y * n;
                sums.l_e += l.l_e * n;
                sums.total += l.total * n;
            }
            let n = rows as f64;
            last_epoch = LossBreakdown {
                l_task: sums.l_task / n,
                l_recon: sums.l_recon / n,
                l_kl: sums.l_kl / n,
                l_vae: sums.l_vae / n,
                l_y: sums.l_y / n,
                l_e: sums.l_e / n,
                total: sums.total / n,
            };
            epoch_losses.push(last_epoch.total);
        }
        log::debug!(
            "task {t}: {} real + {} replay rows, loss {:.4} → {:.4}",
            rows - replay.len(),
            replay.len(),
            epoch_losses.first().copied().unwrap_or(f64::NAN),
            last_epoch.total
        );

        module.freeze();
        self.modules.push(module);
        Ok(TaskTrainingLog {
            task: t,
            real_rows: rows - replay.len(),
            replay_rows: replay.len(),
            epoch_losses,
            last_epoch,
        })
    }

    /// Classifier training set after task `t`. Unseen classes come from
    /// module `t` conditioned on their attributes; seen classes come from the
    /// module chosen by `seen_source`. Rows are ordered by class index.
    pub fn synthesize_classifier_set(
        &self,
        t: usize,
        n_per_class: usize,
        seed: u64,
    ) -> Result<LabeledSet<T>> {
        if t == 0 || t > self.tasks_trained() {
            return Err(Error::invalid(format!(
                "cannot synthesize after task {t}: {} tasks trained",
                self.tasks_trained()
            )));
        }
        if n_per_class == 0 {
            return Err(Error::invalid("n_per_class must be positive"));
        }
        let mut blocks = Vec::new();
        let mut labels = Vec::new();
        for c in 0..self.dataset.num_classes() {
            let owner = self.spec.owner_of(c);
            let source = match self.config.seen_source {
                SeenSource::Owner if owner <= t => owner,
                _ => t,
            };
            let module = &self.modules[source - 1];
            blocks.push(self.generate_class(module, c, n_per_class, seed)?);
            labels.extend(std::iter::repeat_n(c, n_per_class));
        }
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        Ok(LabeledSet {
            features: concatenate(Axis(0), &views).map_err(|e| Error::shape(e.to_string()))?,
            labels,
        })
    }
}
