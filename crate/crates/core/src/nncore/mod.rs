//! Minimal dense-layer neural-network core.
//!
//! Networks are fixed stacks of [`Layer`]s; the backward pass walks the
//! stack in reverse using activations cached by the preceding forward pass.
//! Everything is `f64`.

mod adam;
mod layers;
mod loss;
mod matrix;
mod network;

pub use adam::{adam_step, AdamState};
pub use layers::{
    activation_forward, batchnorm_forward, dense_forward, dropout_forward, sigmoid,
    ActivationKind, ActivationLayer, BatchNormLayer, BatchNormState, DenseLayer, DropoutLayer,
    Layer, Mode, BATCHNORM_EPSILON, BATCHNORM_MOMENTUM, LEAKY_RELU_ALPHA,
};
pub use loss::{loss, LossKind, LOSS_EPSILON};
pub use matrix::{one_hot, Matrix};
pub use network::{Gradient, HiddenBlock, Network};

use crate::rng::{shuffle, Rng};

/// Shuffled mini-batch index lists covering `0..n`.
///
/// A trailing batch of a single row is merged into the previous batch so
/// train-mode batch normalization never sees a degenerate batch.
pub fn minibatches(n: usize, batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(&mut order, rng);
    let batch_size = batch_size.max(1);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(|c| c.to_vec()).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let tail = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(tail);
    }
    batches
}
