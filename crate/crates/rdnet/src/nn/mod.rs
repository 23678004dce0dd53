//! Minimal dense/convolutional neural-network kernel with exact
//! hand-derived gradients.
//!
//! Everything is generic over the scalar type: f32 for training speed,
//! f64 for finite-difference gradient verification.

mod adam;
mod checkpoint;
mod gradcheck;
mod layers;
mod loss;
mod tensor;

pub use adam::Adam;
pub use checkpoint::{load_blocks, save_blocks, ParamBlock, CKPT_MAGIC, CKPT_VERSION};
pub use gradcheck::{grad_check, GradCheckReport};
pub use layers::{residual_add, BatchNorm2d, Conv2d, Dense, Dropout, Relu};
pub use loss::sse_loss;
pub use tensor::Tensor;

/// Forward-pass mode; controls batch-norm statistics and dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Scalar type of a network: f32 in production, f64 under gradient checks.
pub trait Scalar:
    num_traits::Float
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + Default
    + Send
    + Sync
    + std::fmt::Debug
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// A differentiable network fragment.
///
/// `forward` caches whatever `backward` needs; `backward` accumulates
/// parameter gradients and returns the gradient w.r.t. the last input.
pub trait Module<S: Scalar> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Tensor<S>;

    fn backward(&mut self, grad: &Tensor<S>) -> Tensor<S>;

    /// Visits every (block name, parameters, gradients) triple in a fixed
    /// deterministic order.
    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut [S], &mut [S]));

    fn zero_grads(&mut self) {
        self.visit_params(&mut |_, _, g| {
            for v in g.iter_mut() {
                *v = S::zero();
            }
        });
    }

    fn param_count(&mut self) -> usize {
        let mut count = 0;
        self.visit_params(&mut |_, p, _| count += p.len());
        count
    }
}
