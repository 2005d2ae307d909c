//! Dense tensors with reverse-mode differentiation for the handful of
//! operations the temporal models need: dilated 1-D convolution, affine
//! layers, LSTM recurrences, pointwise activations, softmax/log-softmax,
//! temporal pooling and cross-entropy.
//!
//! Everything is generic over [`Real`]; training and inference run in `f32`,
//! gradient checks in `f64` through the same code.

mod adam;
mod conv;
mod gradcheck;
mod graph;
mod lstm;
mod scalar;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use graph::{Gradients, Graph, LstmWeights, Var};
pub use scalar::Real;
pub use tensor::Tensor;

/// Named parameter tensors in a stable order.
pub type ParamSet<F> = indexmap::IndexMap<String, Tensor<F>>;

/// Softmax of a single vector, same arithmetic as [`Graph::softmax`].
pub fn softmax_vec<F: Real>(v: &[F]) -> Vec<F> {
    let mut out = v.to_vec();
    graph::softmax_row(&mut out);
    out
}

/// Log-softmax of a single vector, same arithmetic as [`Graph::log_softmax`].
pub fn log_softmax_vec<F: Real>(v: &[F]) -> Vec<F> {
    let mut out = v.to_vec();
    graph::log_softmax_row(&mut out);
    out
}
