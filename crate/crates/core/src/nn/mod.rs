//! Feedforward networks with a representation tap, hand-written
//! backpropagation and the losses the unlearning objectives need.

pub mod loss;
mod model;
mod optim;

pub use loss::{
    cross_entropy, kl_divergence, log_softmax, per_sample_cross_entropy, softmax, softmax_rows,
    KlOutput, LossOutput,
};
pub use model::{Activation, Architecture, Dense, ForwardTrace, Gradients, Model, Upstream};
pub use optim::Sgd;
