//! Minimal differentiable-computation core: parameter tensors, linear and
//! embedding layers, LSTM recurrence (causal and window-encoder modes),
//! softmax and the pipeline's losses, adaptive-moment optimization,
//! finite-difference gradient checking, and text checkpoints.
//!
//! There is no general autodiff graph: each layer caches what its own
//! backward pass needs, and models wire layer backwards together in reverse
//! call order. All math is f64 and deterministic for fixed seeds and inputs.

mod adam;
mod checkpoint;
mod gradcheck;
mod layers;
mod loss;
mod recurrent;
mod tensor;

pub use adam::{Adam, DEFAULT_LEARNING_RATE};
pub use checkpoint::Checkpoint;
pub use gradcheck::{grad_check, GradCheckable, FD_STEP};
pub use layers::{embed_emotion, Embedding, Linear, Tanh};
pub use loss::{
    cross_entropy, mean_absolute_error, mean_squared_error, softmax, softmax_cross_entropy,
    weighted_l1, weighted_l1_with_grad,
};
pub use recurrent::{Direction, LstmCell, RecurrentLayer};
pub use tensor::Tensor;

/// Default emotion-code width (D).
pub const EMOTION_EMBED_DIM: usize = 16;
/// Default hidden width of the causal generators.
pub const DEFAULT_HIDDEN: usize = 128;
