//! Feature datasets: validated in-memory form, the on-disk container, task
//! splits and the seen/unseen partition, and a synthetic generator.

mod container;
mod synthetic;
mod tasks;

pub use container::{load_dataset, load_task_override, write_dataset, write_task_spec, Meta};
pub use synthetic::{make_synthetic_dataset, SyntheticSpec};
pub use tasks::{seen_unseen_partition, split_tasks, TaskSpec, TaskView};

use ndarray::{Array2, ArrayView1};

use crate::{Error, Result, Scalar};

/// Published statistics of a standard ZSL benchmark, used to validate
/// containers that carry a recognised name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchmarkContract {
    pub name: &'static str,
    pub attr_dim: usize,
    pub num_classes: usize,
    pub num_train: usize,
    pub num_test: usize,
    /// Number of tasks the benchmark is usually split into.
    pub default_tasks: usize,
}

pub const BENCHMARKS: [BenchmarkContract; 5] = [
    BenchmarkContract {
        name: "SUN",
        attr_dim: 102,
        num_classes: 708,
        num_train: 11328,
        num_test: 2832,
        default_tasks: 15,
    },
    BenchmarkContract {
        name: "CUB",
        attr_dim: 312,
        num_classes: 200,
        num_train: 9440,
        num_test: 2348,
        default_tasks: 20,
    },
    BenchmarkContract {
        name: "AWA1",
        attr_dim: 85,
        num_classes: 50,
        num_train: 24382,
        num_test: 6093,
        default_tasks: 5,
    },
    BenchmarkContract {
        name: "AWA2",
        attr_dim: 85,
        num_classes: 50,
        num_train: 29860,
        num_test: 7462,
        default_tasks: 5,
    },
    BenchmarkContract {
        name: "aPY",
        attr_dim: 64,
        num_classes: 32,
        num_train: 12272,
        num_test: 3067,
        default_tasks: 4,
    },
];

/// Class count of the widely distributed SUN split, accepted with a warning.
pub const SUN_PUBLIC_CLASSES: usize = 717;

pub fn benchmark_contract(name: &str) -> Option<&'static BenchmarkContract> {
    BENCHMARKS
        .iter()
        .find(|b| b.name.eq_ignore_ascii_case(name))
}

/// Features, labels and class attributes of one benchmark.
///
/// Immutable after construction; every invariant is checked by [`FeatureDataset::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDataset {
    name: String,
    features_train: Array2<f32>,
    labels_train: Vec<usize>,
    features_test: Array2<f32>,
    labels_test: Vec<usize>,
    attributes: Array2<f32>,
}

impl FeatureDataset {
    pub fn new(
        name: impl Into<String>,
        features_train: Array2<f32>,
        labels_train: Vec<usize>,
        features_test: Array2<f32>,
        labels_test: Vec<usize>,
        attributes: Array2<f32>,
    ) -> Result<Self> {
        let (num_classes, attr_dim) = attributes.dim();
        let feature_dim = features_train.ncols();
        if num_classes < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if attr_dim == 0 || feature_dim == 0 {
            return Err(Error::invalid(
                "feature and attribute dims must be positive",
            ));
        }
        if features_test.ncols() != feature_dim {
            return Err(Error::shape(format!(
                "train features have {feature_dim} columns, test features {}",
                features_test.ncols()
            )));
        }
        for (what, feats, labels) in [
            ("train", &features_train, &labels_train),
            ("test", &features_test, &labels_test),
        ] {
            if feats.nrows() != labels.len() {
                return Err(Error::shape(format!(
                    "{what}: {} feature rows but {} labels",
                    feats.nrows(),
                    labels.len()
                )));
            }
            if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
                return Err(Error::Label { label, num_classes });
            }
        }
        for (what, m) in [
            ("train features", &features_train),
            ("test features", &features_test),
            ("attributes", &attributes),
        ] {
            if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{what}: non-finite entry at flat index {pos}"
                )));
            }
        }
        Ok(FeatureDataset {
            name: name.into(),
            features_train,
            labels_train,
            features_test,
            labels_test,
            attributes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_classes(&self) -> usize {
        self.attributes.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features_train.ncols()
    }

    pub fn attr_dim(&self) -> usize {
        self.attributes.ncols()
    }

    pub fn num_train(&self) -> usize {
        self.labels_train.len()
    }

    pub fn num_test(&self) -> usize {
        self.labels_test.len()
    }

    pub fn features_train(&self) -> &Array2<f32> {
        &self.features_train
    }

    pub fn features_test(&self) -> &Array2<f32> {
        &self.features_test
    }

    pub fn labels_train(&self) -> &[usize] {
        &self.labels_train
    }

    pub fn labels_test(&self) -> &[usize] {
        &self.labels_test
    }

    pub fn attributes(&self) -> &Array2<f32> {
        &self.attributes
    }

    pub fn class_attributes(&self, class: usize) -> ArrayView1<'_, f32> {
        self.attributes.row(class)
    }

    /// Attribute rows for each label, converted to `T`.
    pub fn embeddings_for<T: Scalar>(&self, labels: &[usize]) -> Array2<T> {
        let a = self.attr_dim();
        Array2::from_shape_fn((labels.len(), a), |(i, j)| {
            T::of(self.attributes[[labels[i], j]] as f64)
        })
    }

    pub fn train_rows<T: Scalar>(&self, indices: &[usize]) -> Array2<T> {
        select_rows(&self.features_train, indices)
    }

    pub fn test_features<T: Scalar>(&self) -> Array2<T> {
        self.features_test.mapv(|v| T::of(v as f64))
    }

    /// Checks a recognised benchmark name against its published statistics.
    /// Attribute and class counts must match (SUN may also carry 717
    /// classes); sample counts only warn because public splits differ.
    pub fn check_contract(&self) -> Result<()> {
        let Some(contract) = benchmark_contract(&self.name) else {
            return Ok(());
        };
        let fail = |message: String| Error::Contract {
            dataset: self.name.clone(),
            message,
        };
        if self.attr_dim() != contract.attr_dim {
            return Err(fail(format!(
                "attribute dim {} (expected {})",
                self.attr_dim(),
                contract.attr_dim
            )));
        }
        if self.num_classes() != contract.num_classes {
            if contract.name == "SUN" && self.num_classes() == SUN_PUBLIC_CLASSES {
                log::warn!(
                    "SUN container has {SUN_PUBLIC_CLASSES} classes; the reference statistics list {}",
                    contract.num_classes
                );
            } else {
                return Err(fail(format!(
                    "{} classes (expected {})",
                    self.num_classes(),
                    contract.num_classes
                )));
            }
        }
        if (self.num_train(), self.num_test()) != (contract.num_train, contract.num_test) {
            log::warn!(
                "{}: {} + {} samples differ from the reference {} + {}",
                self.name,
                self.num_train(),
                self.num_test(),
                contract.num_train,
                contract.num_test
            );
        }
        Ok(())
    }
}

fn select_rows<T: Scalar>(m: &Array2<f32>, indices: &[usize]) -> Array2<T> {
    Array2::from_shape_fn((indices.len(), m.ncols()), |(i, j)| {
        T::of(m[[indices[i], j]] as f64)
    })
}
