//! Continual zero-shot learning over pre-extracted image features.
//!
//! One conditional VAE is grown per task and frozen once its task is done.
//! Earlier classes are kept alive by replaying features generated from the
//! frozen decoder that owns them, and features for classes that have not
//! arrived yet are synthesized from their attribute vectors. A fresh
//! single-head classifier trained on synthetic features only is evaluated
//! after every task.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below name the concrete instantiations used by the harness and
//! by the gradient checks.

pub mod classifier;
pub mod cvae;
pub mod data;
pub mod error;
pub mod eval;
pub mod harness;
pub mod learner;
pub mod nn;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mlp32 = nn::Mlp<f32>;
pub type Mlp64 = nn::Mlp<f64>;
pub type CvaeModule32 = cvae::CvaeModule<f32>;
pub type CvaeModule64 = cvae::CvaeModule<f64>;
pub type LearnerState32 = learner::LearnerState<f32>;
pub type LearnerState64 = learner::LearnerState<f64>;
pub type Classifier32 = classifier::Classifier<f32>;
pub type Classifier64 = classifier::Classifier<f64>;
