//! Machine unlearning with counterfactual tuples.
//!
//! The crate trains small feedforward classifiers, removes the influence of
//! a forgetting set from them, and measures how close the result is to a
//! model retrained without that data.
//!
//! * [`nn`]: dense networks with a representation tap and hand-written
//!   backpropagation, softmax cross-entropy and KL divergence.
//! * [`data`]: IDX loading, synthetic clusters, forgetting/remaining splits,
//!   counterfactual tuple construction and batching.
//! * [`unlearn`]: training, retraining, [`unlearn::camu`] and the
//!   finetuning and gradient-ascent baselines.
//! * [`eval`]: split accuracies, a loss-threshold membership-inference
//!   attack, relearning curves and seed averaging.

pub mod data;
mod error;
pub mod eval;
pub mod nn;
pub mod rng;
mod tensor;
pub mod unlearn;

pub use error::{Error, Result};
pub use tensor::Tensor;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/unlearning.md")]
    mod unlearning {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
}
