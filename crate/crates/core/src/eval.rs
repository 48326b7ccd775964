//! Seen / unseen / harmonic accuracy after each task and their means.

use serde::{Deserialize, Serialize};

use crate::classifier::{per_class_accuracy, per_sample_accuracy, AccuracyMode, Classifier};
use crate::data::{seen_unseen_partition, FeatureDataset, TaskSpec};
use crate::{Error, Result, Scalar};

/// Accuracies in `[0, 1]` after task `t`. Unseen and harmonic accuracy are
/// absent after the last task, when no class is left unseen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub t: usize,
    pub seen_acc: f64,
    pub unseen_acc: Option<f64>,
    pub harmonic: Option<f64>,
}

impl TaskMetrics {
    pub fn new(t: usize, seen_acc: f64, unseen_acc: Option<f64>) -> Self {
        TaskMetrics {
            t,
            seen_acc,
            unseen_acc,
            harmonic: unseen_acc.map(|u| harmonic(seen_acc, u)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_task: Vec<TaskMetrics>,
    /// Mean seen accuracy over tasks `1..=T`.
    pub msa: f64,
    /// Mean unseen accuracy over tasks `1..T`.
    pub mua: f64,
    /// Mean of the per-task harmonic accuracies over tasks `1..T`.
    pub mh: f64,
}

/// `2su / (s + u)`, and 0 when both are 0.
pub fn harmonic(s: f64, u: f64) -> f64 {
    if s + u > 0.0 {
        2.0 * s * u / (s + u)
    } else {
        0.0
    }
}

pub fn evaluate_after_task<T: Scalar>(
    classifier: &Classifier<T>,
    dataset: &FeatureDataset,
    spec: &TaskSpec,
    t: usize,
    mode: AccuracyMode,
) -> Result<TaskMetrics> {
    if t == 0 {
        return Err(Error::invalid("evaluation needs at least one trained task"));
    }
    let (seen, unseen) = seen_unseen_partition(spec, t)?;
    let predictions = classifier.predict(dataset.test_features::<T>().view())?;
    let labels = dataset.labels_test();
    let accuracy = |classes: &[usize]| match mode {
        AccuracyMode::PerClass => per_class_accuracy(&predictions, labels, classes),
        AccuracyMode::PerSample => per_sample_accuracy(&predictions, labels, classes),
    };
    let seen_acc = accuracy(&seen)?;
    let unseen_acc = if unseen.is_empty() {
        None
    } else {
        Some(accuracy(&unseen)?)
    };
    Ok(TaskMetrics::new(t, seen_acc, unseen_acc))
}

pub fn summarize(per_task: &[TaskMetrics]) -> Result<MetricsReport> {
    let tasks = per_task.len();
    if tasks < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 tasks to summarize, got {tasks}"
        )));
    }
    for (i, m) in per_task.iter().enumerate() {
        let last = i + 1 == tasks;
        if m.t != i + 1 {
            return Err(Error::invalid(format!(
                "entry {} is for task {}",
                i + 1,
                m.t
            )));
        }
        if last != m.unseen_acc.is_none() || last != m.harmonic.is_none() {
            return Err(Error::invalid(format!(
                "task {}: unseen and harmonic accuracy must be present exactly before the last task",
                m.t
            )));
        }
    }
    let head = &per_task[..tasks - 1];
    let mean = |values: &mut dyn Iterator<Item = f64>, n: usize| values.sum::<f64>() / n as f64;
    Ok(MetricsReport {
        per_task: per_task.to_vec(),
        msa: mean(&mut per_task.iter().map(|m| m.seen_acc), tasks),
        mua: mean(&mut head.iter().filter_map(|m| m.unseen_acc), tasks - 1),
        mh: mean(&mut head.iter().filter_map(|m| m.harmonic), tasks - 1),
    })
}
