use crate::error::{Error, Result};
use crate::nn::model::{ForwardTrace, Gradients, Model, Upstream};

/// Plain stochastic gradient descent with a reusable gradient buffer.
#[derive(Debug, Clone)]
pub struct Sgd {
    learning_rate: f64,
    grads: Gradients,
}

impl Sgd {
    pub fn new(model: &Model, learning_rate: f64) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {learning_rate}"
            )));
        }
        Ok(Sgd {
            learning_rate,
            grads: Gradients::zeros_like(model),
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// Gradients accumulated by the most recent step.
    pub fn last_gradients(&self) -> &Gradients {
        &self.grads
    }

    /// Backpropagates every `(trace, upstream)` pair, sums the parameter
    /// gradients in the given order and takes one step.
    pub fn backward_and_step(
        &mut self,
        model: &mut Model,
        passes: &[(&ForwardTrace, &Upstream)],
    ) -> Result<()> {
        if passes.is_empty() {
            return Err(Error::State("optimizer step without a forward trace".into()));
        }
        if self.grads.extractor.len() != model.extractor_layers().len()
            || self.grads.head.len() != model.head_layers().len()
        {
            return Err(Error::State("optimizer state built for a different model".into()));
        }
        self.grads.fill_zero();
        for (trace, upstream) in passes {
            model.accumulate(&mut self.grads, trace, upstream)?;
        }
        model.apply_sgd(&self.grads, self.learning_rate);
        Ok(())
    }
}
