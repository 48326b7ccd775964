//! Single-head softmax classifier trained only on synthesized features.
//! It never receives task identity: predictions range over every class.

use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::learner::{LabeledSet, TrainConfig};
use crate::nn::{
    load_checkpoint, save_checkpoint, Activation, AdamConfig, AdamState, Mlp, Objective,
};
use crate::seed::{self, stream};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// Mean over classes of the within-class hit rate.
    PerClass,
    /// Fraction of all samples predicted correctly.
    PerSample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classifier<T> {
    net: Mlp<T>,
    trained_for_task: usize,
    steps: u64,
}

impl<T: Scalar> Classifier<T> {
    pub fn from_net(net: Mlp<T>, trained_for_task: usize) -> Self {
        Classifier {
            net,
            trained_for_task,
            steps: 0,
        }
    }

    pub fn net(&self) -> &Mlp<T> {
        &self.net
    }

    pub fn trained_for_task(&self) -> usize {
        self.trained_for_task
    }

    pub fn num_classes(&self) -> usize {
        self.net.output_dim()
    }

    pub fn logits(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        self.net.forward(x)
    }

    /// Row-wise argmax; ties go to the smaller class index.
    pub fn predict(&self, x: ArrayView2<T>) -> Result<Vec<usize>> {
        Ok(argmax_rows(self.logits(x)?.view()))
    }

    pub fn accuracy(
        &self,
        features: ArrayView2<T>,
        labels: &[usize],
        classes: &[usize],
        mode: AccuracyMode,
    ) -> Result<f64> {
        if features.nrows() != labels.len() {
            return Err(Error::shape(format!(
                "{} feature rows for {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        let predictions = self.predict(features)?;
        match mode {
            AccuracyMode::PerClass => per_class_accuracy(&predictions, labels, classes),
            AccuracyMode::PerSample => per_sample_accuracy(&predictions, labels, classes),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_checkpoint(path, &self.net, self.steps)
    }

    pub fn load(path: &Path, trained_for_task: usize) -> Result<Self> {
        let (net, steps) = load_checkpoint(path)?;
        Ok(Classifier {
            net,
            trained_for_task,
            steps,
        })
    }
}

pub fn argmax_rows<T: Scalar>(logits: ArrayView2<T>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Mean over `classes` of (correct predictions within the class / samples of
/// the class). Samples whose label is outside `classes` are ignored.
pub fn per_class_accuracy(
    predictions: &[usize],
    labels: &[usize],
    classes: &[usize],
) -> Result<f64> {
    if classes.is_empty() {
        return Err(Error::invalid("empty class subset"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::shape("predictions and labels differ in length"));
    }
    let mut total = 0.0;
    for &c in classes {
        let (mut hits, mut count) = (0usize, 0usize);
        for (&p, &l) in predictions.iter().zip(labels) {
            if l == c {
                count += 1;
                hits += usize::from(p == c);
            }
        }
        if count == 0 {
            return Err(Error::EmptyClass { class: c });
        }
        total += hits as f64 / count as f64;
    }
    Ok(total / classes.len() as f64)
}

/// Fraction of samples of `classes` predicted correctly.
pub fn per_sample_accuracy(
    predictions: &[usize],
    labels: &[usize],
    classes: &[usize],
) -> Result<f64> {
    if classes.is_empty() {
        return Err(Error::invalid("empty class subset"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::shape("predictions and labels differ in length"));
    }
    let mut member = vec![false; classes.iter().max().map_or(0, |m| m + 1)];
    classes.iter().for_each(|&c| member[c] = true);
    let (mut hits, mut count) = (0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        if member.get(l).copied().unwrap_or(false) {
            count += 1;
            hits += usize::from(p == l);
        }
    }
    if count == 0 {
        return Err(Error::EmptyClass { class: classes[0] });
    }
    Ok(hits as f64 / count as f64)
}

/// Fresh `d → hidden → num_classes` network trained with mini-batch Adam
/// on softmax cross-entropy over the synthetic set.
pub fn train_classifier<T: Scalar>(
    set: &LabeledSet<T>,
    num_classes: usize,
    cfg: &TrainConfig,
    task: usize,
    seed: u64,
) -> Result<Classifier<T>> {
    if set.is_empty() {
        return Err(Error::invalid("empty classifier training set"));
    }
    if set.features.nrows() != set.len() {
        return Err(Error::shape("feature rows and labels differ"));
    }
    if let Some(&label) = set.labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::Label { label, num_classes });
    }
    let mut net = Mlp::init(
        &[set.features.ncols(), cfg.classifier_hidden, num_classes],
        &[cfg.classifier_activation, Activation::Identity],
        seed::derive(seed, &[stream::CLASSIFIER_INIT]),
    )?;
    let mut optim = AdamState::new(&net, AdamConfig::with_lr(cfg.classifier_lr));
    let mut rng = seed::rng(seed::derive(seed, &[stream::CLASSIFIER_SHUFFLE]));
    let mut order: Vec<usize> = (0..set.len()).collect();
    for _ in 0..cfg.classifier_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let x = set.features.select(Axis(0), chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| set.labels[i]).collect();
            let (_, grads) = net.loss_and_grad(
                x.view(),
                &Objective::SoftmaxCrossEntropy { labels: &labels },
            )?;
            optim.update(&mut net, &grads)?;
        }
    }
    Ok(Classifier {
        net,
        trained_for_task: task,
        steps: optim.step,
    })
}
