//! Minimal feed-forward network stack: multilayer perceptrons with explicit
//! backpropagation, Adam optimization, tanh-squashed Gaussian sampling, and
//! the replay buffer.

mod adam;
mod buffer;
mod mlp;
mod policy;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use buffer::{ReplayBuffer, Transition};
pub use mlp::{ForwardCache, Mlp, MlpGrads, NeuralError};
pub use policy::{
    sample_batch, sample_squashed, squashed_log_prob, BatchSample, GaussianActor,
    GaussianPolicyOutput, LOG_SIGMA_MAX, LOG_SIGMA_MIN, TANH_EPS,
};
