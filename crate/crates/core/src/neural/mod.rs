//! A small differentiable kernel for the CNN decoder.
//!
//! Every layer has a forward pass and an exact backward pass; there is no
//! general autodiff. Activations are [`Tensor3`] values shaped
//! `(batch, length, channels)`. Training and evaluation run in `f32`; the
//! same code instantiated at `f64` backs the finite-difference checks.

mod adam;
mod batchnorm;
mod cnn;
mod conv;
mod dense;
mod loss;
mod real;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use batchnorm::{BatchNorm, BnCache, BnGrads, DEFAULT_BN_EPSILON, DEFAULT_BN_MOMENTUM};
pub use cnn::{CnnCache, CnnConfig, CnnDecoder, CnnGrads, ConvBlock};
pub use conv::{Conv1d, ConvCache, ConvGrads};
pub use dense::{relu, relu_backward, sigmoid, DenseGrads, DenseSigmoid};
pub use loss::mse_loss;
pub use real::Real;
pub use tensor::Tensor3;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Infer => "infer",
        }
    }
}
