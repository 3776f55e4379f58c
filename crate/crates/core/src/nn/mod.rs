//! Dense network substrate: layers, activations, batch norm, Adam, LR decay.

mod activation;
mod adam;
mod batchnorm;
mod dense;
mod network;
mod schedule;

pub use activation::{softmax, Activation, LEAKY_SLOPE};
pub use adam::{adam_step, AdamState};
pub use batchnorm::{BatchNorm, BatchNormCache, Mode};
pub use dense::{DenseCache, DenseLayer};
pub use network::{Gradients, Layer, Sequential, Tape};
pub use schedule::LrSchedule;
