use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig, Precision};
use crate::classifier::{train_classifier, Classifier};
use crate::data::{
    benchmark_contract, load_dataset, load_task_override, make_synthetic_dataset, FeatureDataset,
    TaskSpec,
};
use crate::eval::{evaluate_after_task, summarize, MetricsReport, TaskMetrics};
use crate::learner::{LearnerState, TaskTrainingLog, TrainConfig};
use crate::seed::{self, stream};
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub report: MetricsReport,
    pub wall_seconds: f64,
    pub module_params: Vec<usize>,
    pub classifier_params: usize,
    pub training: Vec<TaskTrainingLog>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_replay: usize,
    pub msa: f64,
    pub mua: f64,
    pub mh: f64,
}

/// Loads or generates the dataset and settles the task split.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<(Arc<FeatureDataset>, TaskSpec)> {
    let (ds, override_spec) = match &cfg.data {
        DataSource::Path(dir) => {
            let ds = load_dataset(dir)?;
            let spec = load_task_override(dir, ds.num_classes())?;
            (ds, spec)
        }
        DataSource::Synthetic(s) => (make_synthetic_dataset(&s.spec())?, None),
    };
    let spec = match (override_spec, cfg.num_tasks) {
        (Some(spec), Some(n)) if spec.num_tasks() != n => {
            return Err(Error::Config(format!(
                "num_tasks = {n} but tasks.json defines {} tasks",
                spec.num_tasks()
            )))
        }
        (Some(spec), _) => spec,
        (None, Some(n)) => TaskSpec::contiguous(ds.num_classes(), n)?,
        (None, None) => {
            let n = benchmark_contract(ds.name())
                .map(|b| b.default_tasks)
                .ok_or_else(|| Error::Config("num_tasks is required for this dataset".into()))?;
            TaskSpec::contiguous(ds.num_classes(), n)?
        }
    };
    if spec.num_tasks() < 2 {
        return Err(Error::Config("at least 2 tasks are required".into()));
    }
    Ok((Arc::new(ds), spec))
}

/// Synthesizes the classifier set after task `t`, trains a fresh classifier
/// on it and evaluates it on the real test split.
pub fn evaluate_task<T: Scalar>(
    state: &LearnerState<T>,
    t: usize,
) -> Result<(TaskMetrics, Classifier<T>)> {
    let inner = || {
        let cfg = state.config();
        let set = state.synthesize_classifier_set(
            t,
            cfg.n_classifier_per_class,
            seed::derive(cfg.seed, &[stream::CLASSIFIER_SET, t as u64]),
        )?;
        let classifier = train_classifier(
            &set,
            state.dataset().num_classes(),
            cfg,
            t,
            seed::derive(cfg.seed, &[stream::CLASSIFIER_INIT, t as u64]),
        )?;
        let metrics =
            evaluate_after_task(&classifier, state.dataset(), state.spec(), t, cfg.accuracy)?;
        Ok((metrics, classifier))
    };
    inner().map_err(|e: Error| e.in_task(t))
}

/// Re-runs classifier training and evaluation for every trained task.
pub fn evaluate_learner<T: Scalar>(state: &LearnerState<T>) -> Result<MetricsReport> {
    let per_task = (1..=state.tasks_trained())
        .map(|t| evaluate_task(state, t).map(|(m, _)| m))
        .collect::<Result<Vec<_>>>()?;
    summarize(&per_task)
}

/// Trains all tasks in order, evaluating after each one.
pub fn run_seed<T: Scalar>(
    dataset: Arc<FeatureDataset>,
    spec: TaskSpec,
    train: &TrainConfig,
    seed: u64,
    checkpoint_dir: Option<&Path>,
) -> Result<SeedRun> {
    let start = Instant::now();
    let config = TrainConfig {
        seed,
        ..train.clone()
    };
    let views = spec.views(&dataset)?;
    let mut state = LearnerState::<T>::new(dataset, spec, config)?;
    let mut per_task = Vec::with_capacity(views.len());
    let mut training = Vec::with_capacity(views.len());
    let mut classifier_params = 0;
    for view in &views {
        training.push(state.train_task(view)?);
        let (metrics, classifier) = evaluate_task(&state, view.task_index)?;
        log::info!(
            "seed {seed} task {}: S={:.4} U={:?} H={:?}",
            view.task_index,
            metrics.seen_acc,
            metrics.unseen_acc,
            metrics.harmonic
        );
        classifier_params = classifier.net().num_params();
        per_task.push(metrics);
    }
    if let Some(dir) = checkpoint_dir {
        state.save(dir)?;
    }
    Ok(SeedRun {
        seed,
        report: summarize(&per_task)?,
        wall_seconds: start.elapsed().as_secs_f64(),
        module_params: state.modules().iter().map(|m| m.num_params()).collect(),
        classifier_params,
        training,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let (dataset, spec) = prepare_data(cfg)?;
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let ckpt = match (&cfg.output_dir, cfg.save_checkpoints) {
            (Some(out), true) => Some(out.join(format!("seed_{seed}")).join("learner")),
            _ => None,
        };
        let run = match cfg.precision {
            Precision::F32 => run_seed::<f32>(
                dataset.clone(),
                spec.clone(),
                &cfg.train,
                seed,
                ckpt.as_deref(),
            ),
            Precision::F64 => run_seed::<f64>(
                dataset.clone(),
                spec.clone(),
                &cfg.train,
                seed,
                ckpt.as_deref(),
            ),
        }?;
        runs.push(run);
    }
    Ok(RunRecord {
        config: cfg.clone(),
        runs,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// One full experiment per replay count; metrics averaged over seeds.
pub fn sweep_replay(cfg: &ExperimentConfig, values: &[usize]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(values.len());
    for &n in values {
        let mut c = cfg.clone();
        c.train.n_replay_per_class = n;
        c.save_checkpoints = false;
        let record = run_experiment(&c)?;
        let reports = || record.runs.iter().map(|r| &r.report);
        rows.push(SweepRow {
            n_replay: n,
            msa: mean(reports().map(|r| r.msa)),
            mua: mean(reports().map(|r| r.mua)),
            mh: mean(reports().map(|r| r.mh)),
        });
    }
    Ok(rows)
}
