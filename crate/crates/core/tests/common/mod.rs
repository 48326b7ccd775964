#![allow(dead_code)]

use std::path::PathBuf;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use czsl_core::cvae::{Batch, CvaeDims, CvaeModule, HiddenDims};
use czsl_core::harness::ExperimentConfig;
use czsl_core::learner::LossWeights;
use czsl_core::nn::{Activation, Mlp, Objective};

pub const FD_STEP: f64 = 1e-4;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The shipped desk-scale synthetic configuration.
pub fn desk_config() -> ExperimentConfig {
    ExperimentConfig::load(&repo_root().join("configs/synthetic.toml")).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Central differences of `f` around `params`.
pub fn central_difference(params: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + FD_STEP;
            let up = f(&p);
            p[i] = orig - FD_STEP;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps vanishing gradients
/// from dividing round-off by zero.
pub fn relative_errors(analytic: &[f64], numeric: &[f64]) -> Vec<f64> {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .collect()
}

/// Nearest-rank percentile, `p` in `[0, 100]`.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank - 1]
}

#[derive(Clone, Copy, Debug)]
pub enum LossKind {
    CrossEntropy,
    Mse,
    Kl,
}

/// One randomly drawn network/loss pair for gradient checking.
pub struct GradCase {
    pub net: Mlp<f64>,
    pub x: Array2<f64>,
    pub loss: LossKind,
    pub labels: Vec<usize>,
    pub target: Array2<f64>,
    pub scale: f64,
}

impl GradCase {
    pub fn draw(seed: u64) -> GradCase {
        let mut r = rng(seed);
        let loss = [LossKind::CrossEntropy, LossKind::Mse, LossKind::Kl][(seed % 3) as usize];
        let depth = r.random_range(1..=3);
        let input = r.random_range(2..=8);
        let mut dims = vec![input];
        for _ in 1..depth {
            dims.push(r.random_range(3..=12));
        }
        let out = match loss {
            LossKind::Kl => 2 * r.random_range(1..=4),
            _ => r.random_range(2..=6),
        };
        dims.push(out);
        let acts: Vec<Activation> = (0..depth)
            .map(|i| {
                if i + 1 < depth && r.random_bool(0.7) {
                    Activation::Relu
                } else {
                    Activation::Identity
                }
            })
            .collect();
        let mut net = Mlp::<f64>::init(&dims, &acts, seed).unwrap();
        // non-zero biases so every parameter is exercised
        let params: Vec<f64> = net
            .params_flat()
            .iter()
            .map(|p| p + 0.1 * r.sample::<f64, _>(StandardNormal))
            .collect();
        net.set_params_flat(&params).unwrap();
        assert!(net.num_params() <= 1000);
        let batch = r.random_range(2..=7);
        let x = normal(&mut r, batch, input);
        let labels = (0..batch).map(|_| r.random_range(0..out)).collect();
        let target = normal(&mut r, batch, out);
        let scale = if r.random_bool(0.5) {
            1.0
        } else {
            r.random_range(0.25..3.0)
        };
        GradCase {
            net,
            x,
            loss,
            labels,
            target,
            scale,
        }
    }

    fn objective(&self) -> Objective<'_, f64> {
        let base = match self.loss {
            LossKind::CrossEntropy => Objective::SoftmaxCrossEntropy {
                labels: &self.labels,
            },
            LossKind::Mse => Objective::Mse {
                target: self.target.view(),
            },
            LossKind::Kl => Objective::GaussianKl,
        };
        Objective::Scaled(self.scale, Box::new(base))
    }

    /// Relative errors between analytic and finite-difference gradients.
    pub fn errors(&self) -> Vec<f64> {
        let objective = self.objective();
        let (_, grads) = self.net.loss_and_grad(self.x.view(), &objective).unwrap();
        let mut probe = self.net.clone();
        let numeric = central_difference(&self.net.params_flat(), |p| {
            probe.set_params_flat(p).unwrap();
            probe.loss_and_grad(self.x.view(), &objective).unwrap().0
        });
        relative_errors(&grads.flat(), &numeric)
    }
}

/// Finite-difference check of the full weighted objective of a small module.
pub fn cvae_gradient_errors(seed: u64, weights: LossWeights) -> Vec<f64> {
    let dims = CvaeDims {
        feature_dim: 5,
        attr_dim: 3,
        num_classes: 4,
        z_dim: 2,
    };
    let hidden = HiddenDims {
        encoder: vec![6],
        decoder: vec![6],
        aux: vec![5],
    };
    let fresh = CvaeModule::<f64>::new(1, vec![0, 1, 2], dims, &hidden, seed).unwrap();
    let mut r = rng(seed);
    // zero biases put ReLU pre-activations exactly on the kink
    let [enc, dec, aux] = [fresh.encoder(), fresh.decoder(), fresh.aux()].map(|net| {
        let mut net = net.clone();
        let p: Vec<f64> = net
            .params_flat()
            .iter()
            .map(|v| v + 0.1 * r.sample::<f64, _>(StandardNormal))
            .collect();
        net.set_params_flat(&p).unwrap();
        net
    });
    let module = CvaeModule::from_parts(1, vec![0, 1, 2], dims, enc, dec, aux).unwrap();
    let x = normal(&mut r, 6, 5);
    let e = normal(&mut r, 6, 3);
    let labels = vec![0, 1, 2, 2, 1, 0];
    let noise = normal(&mut r, 6, 2);
    let active = [0, 1, 2];
    let batch = Batch {
        x: x.view(),
        labels: &labels,
        e: e.view(),
    };
    let (_, grads) = module
        .loss_and_gradients(&batch, noise.view(), &active, &weights)
        .unwrap();

    let nets = [
        module.encoder().clone(),
        module.decoder().clone(),
        module.aux().clone(),
    ];
    let analytic = [&grads.encoder, &grads.decoder, &grads.aux];
    let mut errors = Vec::new();
    for k in 0..3 {
        let numeric = central_difference(&nets[k].params_flat(), |p| {
            let mut parts = nets.clone();
            parts[k].set_params_flat(p).unwrap();
            let [enc, dec, aux] = parts;
            let m = CvaeModule::from_parts(1, vec![0, 1, 2], dims, enc, dec, aux).unwrap();
            m.losses(&batch, noise.view(), &active, &weights)
                .unwrap()
                .total
        });
        errors.extend(relative_errors(&analytic[k].flat(), &numeric));
    }
    errors
}

/// Brute-force per-class accuracy over `classes` from raw predictions.
pub fn oracle_per_class(pred: &[usize], labels: &[usize], classes: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &c in classes {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        let hits = members.iter().filter(|&&i| pred[i] == c).count();
        sum += hits as f64 / members.len() as f64;
    }
    sum / classes.len() as f64
}

/// Brute-force (mSA, mUA, mH) from per-task seen and unseen accuracies; the
/// last task carries no unseen accuracy.
pub fn oracle_summary(seen: &[f64], unseen: &[f64]) -> (f64, f64, f64) {
    let t = seen.len();
    assert_eq!(unseen.len(), t - 1);
    let mut msa = 0.0;
    for s in seen {
        msa += s;
    }
    let (mut mua, mut mh) = (0.0, 0.0);
    for i in 0..t - 1 {
        mua += unseen[i];
        let (s, u) = (seen[i], unseen[i]);
        mh += if s + u > 0.0 {
            2.0 * s * u / (s + u)
        } else {
            0.0
        };
    }
    (msa / t as f64, mua / (t - 1) as f64, mh / (t - 1) as f64)
}
