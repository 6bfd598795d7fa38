//! Minimal differentiable function approximator.
//!
//! [`Mlp`] stores every weight and bias in one flat buffer so that
//! optimizers, target-network blending and gradient buffers all work on
//! plain slices. Gradients come from a recorded forward pass ([`Tape`])
//! and yield derivatives with respect to both parameters and inputs.

mod adam;
mod matrix;
mod mlp;

pub use adam::{Adam, AdamConfig};
pub use matrix::Matrix;
pub use mlp::{Activation, Gradients, LayerShape, Mlp, Tape};
