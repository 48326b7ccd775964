//! Minimal differentiable MLP substrate: dense layers with relu or identity
//! activations, hand-written reverse mode, the loss primitives the models
//! need, and Adam.

mod adam;
mod checkpoint;
mod loss;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{
    checkpoint_bytes, load_checkpoint, read_checkpoint, read_descriptor, save_checkpoint,
    write_checkpoint, CheckpointDescriptor, LayerDescriptor,
};
pub use loss::{
    gaussian_kl, mse, reparameterize, softmax_cross_entropy, softmax_mse, softmax_rows,
};
pub use mlp::{Activation, Gradients, Layer, LayerGrad, Mlp, Objective, Trace};

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::{Error, Result, Scalar};

pub type Matrix<T> = Array2<T>;

/// Column-wise concatenation `[a | b]`.
pub fn hcat<T: Scalar>(a: ArrayView2<T>, b: ArrayView2<T>) -> Result<Array2<T>> {
    if a.nrows() != b.nrows() {
        return Err(Error::shape(format!(
            "cannot concatenate {} rows with {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    concatenate(Axis(1), &[a, b]).map_err(|e| Error::shape(e.to_string()))
}

pub(crate) fn check_same_shape<T, U>(
    what: &str,
    a: &ArrayView2<T>,
    b: &ArrayView2<U>,
) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::shape(format!(
            "{what}: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}
