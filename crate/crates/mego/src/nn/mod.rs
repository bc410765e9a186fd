//! Minimal dense neural-network substrate.
//!
//! Just enough machinery for the expert models: row-major f64 matrices,
//! dense/batch-norm/activation layers with explicit per-layer tapes for
//! reverse-mode gradients, the Adam update, and the loss terms of the
//! training objective. Everything is 64-bit and deterministic; the
//! networks are tiny, so determinism beats speed.
//!
//! A network instance is single-threaded; distinct networks may be used
//! from distinct threads. RNGs are always passed in explicitly.

mod adam;
mod layer;
mod loss;
mod matrix;

pub use adam::{AdamState, AdamTarget};
pub use layer::{Activation, BatchNormLayer, DenseLayer, Init, Layer, Mlp, Mode, Tape};
pub(crate) use layer::hidden_block;
pub use loss::{kl_standard_normal, mse, mse_grad, reparameterize};
pub use matrix::Matrix;
