use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::FeatureDataset;
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Desk-scale dataset whose class means are a linear function of the class
/// attributes, so attribute-conditioned generation can transfer to classes
/// that were never trained on.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub attr_dim: usize,
    pub feature_dim: usize,
    pub samples_per_class: usize,
    pub cluster_noise: f64,
    /// `attr_dim × feature_dim`; class mean = `attributes[c] · map`.
    pub attribute_to_mean_map: Array2<f64>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Standard-normal map scaled by `1/sqrt(attr_dim)`, drawn from its own
    /// stream of `seed`.
    pub fn with_random_map(
        num_classes: usize,
        attr_dim: usize,
        feature_dim: usize,
        samples_per_class: usize,
        cluster_noise: f64,
        seed: u64,
    ) -> Self {
        let mut rng = seed::rng(seed::derive(seed, &[stream::SYNTHETIC_MAP]));
        let scale = 1.0 / (attr_dim.max(1) as f64).sqrt();
        let attribute_to_mean_map = Array2::from_shape_simple_fn((attr_dim, feature_dim), || {
            scale * rng.sample::<f64, _>(StandardNormal)
        });
        SyntheticSpec {
            num_classes,
            attr_dim,
            feature_dim,
            samples_per_class,
            cluster_noise,
            attribute_to_mean_map,
            seed,
        }
    }

    pub fn test_per_class(&self) -> usize {
        (self.samples_per_class / 5).max(1)
    }

    pub fn train_per_class(&self) -> usize {
        self.samples_per_class - self.test_per_class()
    }

    fn validate(&self) -> Result<()> {
        if self.num_classes < 2 || self.attr_dim == 0 || self.feature_dim == 0 {
            return Err(Error::invalid(
                "synthetic spec needs C ≥ 2 and positive dims",
            ));
        }
        if self.samples_per_class < 2 {
            return Err(Error::invalid("samples_per_class must be at least 2"));
        }
        if !(self.cluster_noise >= 0.0 && self.cluster_noise.is_finite()) {
            return Err(Error::invalid(
                "cluster_noise must be a finite non-negative number",
            ));
        }
        if self.attribute_to_mean_map.dim() != (self.attr_dim, self.feature_dim) {
            return Err(Error::shape(format!(
                "attribute map is {:?}, expected ({}, {})",
                self.attribute_to_mean_map.dim(),
                self.attr_dim,
                self.feature_dim
            )));
        }
        Ok(())
    }
}

pub fn make_synthetic_dataset(spec: &SyntheticSpec) -> Result<FeatureDataset> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let (c, d) = (spec.num_classes, spec.feature_dim);
    let attributes =
        Array2::from_shape_simple_fn((c, spec.attr_dim), || rng.sample::<f64, _>(StandardNormal));
    let means = attributes.dot(&spec.attribute_to_mean_map);

    let (n_train, n_test) = (spec.train_per_class(), spec.test_per_class());
    let mut train = Array2::zeros((c * n_train, d));
    let mut test = Array2::zeros((c * n_test, d));
    let (mut labels_train, mut labels_test) = (Vec::new(), Vec::new());
    for class in 0..c {
        for i in 0..spec.samples_per_class {
            let mut row = if i < n_train {
                labels_train.push(class);
                train.row_mut(class * n_train + i)
            } else {
                labels_test.push(class);
                test.row_mut(class * n_test + i - n_train)
            };
            for (j, v) in row.iter_mut().enumerate() {
                let noise: f64 = rng.sample(StandardNormal);
                *v = (means[[class, j]] + spec.cluster_noise * noise) as f32;
            }
        }
    }
    FeatureDataset::new(
        "synthetic",
        train,
        labels_train,
        test,
        labels_test,
        attributes.mapv(|v| v as f32),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = SyntheticSpec::with_random_map(8, 4, 16, 40, 0.3, 7);
        let a = make_synthetic_dataset(&spec).unwrap();
        let b =
            make_synthetic_dataset(&SyntheticSpec::with_random_map(8, 4, 16, 40, 0.3, 7)).unwrap();
        let bits = |ds: &FeatureDataset| -> Vec<u32> {
            ds.features_train()
                .iter()
                .chain(ds.features_test())
                .chain(ds.attributes())
                .map(|v| v.to_bits())
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a, b);
        assert_eq!(a.num_train() + a.num_test(), 320);
        assert_eq!(a.num_test(), 8 * 8);
    }

    #[test]
    fn zero_noise_collapses_classes() {
        let ds =
            make_synthetic_dataset(&SyntheticSpec::with_random_map(3, 2, 5, 10, 0.0, 1)).unwrap();
        for (row, &label) in ds
            .features_train()
            .rows()
            .into_iter()
            .zip(ds.labels_train())
        {
            let first = ds.labels_train().iter().position(|&l| l == label).unwrap();
            assert_eq!(row, ds.features_train().row(first));
        }
        // test rows of class 0 equal its train rows
        assert_eq!(ds.features_test().row(0), ds.features_train().row(0));
    }

    #[test]
    fn split_sizes() {
        let spec = SyntheticSpec::with_random_map(4, 2, 3, 2, 0.1, 0);
        assert_eq!((spec.train_per_class(), spec.test_per_class()), (1, 1));
        let spec = SyntheticSpec::with_random_map(4, 2, 3, 60, 0.1, 0);
        assert_eq!((spec.train_per_class(), spec.test_per_class()), (48, 12));
    }

    #[test]
    fn rejects_single_sample_per_class() {
        let spec = SyntheticSpec::with_random_map(4, 2, 3, 1, 0.1, 0);
        assert!(make_synthetic_dataset(&spec).is_err());
    }
}
