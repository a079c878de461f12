//! Training, retraining, counterfactual unlearning and the comparison
//! baselines.

mod baselines;
mod camu;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Architecture, Model};

pub use baselines::{finetune, neg_grad};
pub use camu::camu;
pub use train::{retrain, train, train_with_losses};
pub(crate) use train::CrossEntropyEpochs;

/// Hyperparameters of ordinary training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub architecture: Architecture,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("train.epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be at least 1".into()));
        }
        check_rate("train.learning_rate", self.learning_rate)?;
        self.architecture.validate()
    }
}

/// Hyperparameters shared by every unlearning method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearnConfig {
    /// Passes over the unlearning data.
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Forgetting/counterfactual terms of both objectives.
    #[serde(default = "yes")]
    pub use_counterfactual: bool,
    /// Alignment of remaining-sample representations with the original model.
    #[serde(default = "yes")]
    pub use_repr_alignment: bool,
    /// Weight of the gradient-ascent term of [`neg_grad`].
    #[serde(default = "one")]
    pub ascent_weight: f64,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

impl Default for UnlearnConfig {
    fn default() -> Self {
        UnlearnConfig {
            epochs: 5,
            learning_rate: 0.001,
            batch_size: 32,
            seed: 0,
            use_counterfactual: true,
            use_repr_alignment: true,
            ascent_weight: 1.0,
        }
    }
}

impl UnlearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("unlearn.epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("unlearn.batch_size must be at least 1".into()));
        }
        check_rate("unlearn.learning_rate", self.learning_rate)?;
        if !(self.ascent_weight.is_finite() && self.ascent_weight >= 0.0) {
            return Err(Error::Config(format!(
                "unlearn.ascent_weight must be finite and non-negative, got {}",
                self.ascent_weight
            )));
        }
        Ok(())
    }
}

fn check_rate(field: &str, lr: f64) -> Result<()> {
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(Error::Config(format!(
            "{field} must be finite and non-negative, got {lr}"
        )));
    }
    Ok(())
}

/// Mean losses of one unlearning epoch. `kl` is zero for methods without a
/// representation objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub kl: f64,
    pub ce: f64,
}

#[derive(Debug, Clone)]
pub struct UnlearnResult {
    pub model: Model,
    pub wall_time_seconds: f64,
    /// One entry per epoch.
    pub loss_trace: Vec<EpochLoss>,
    /// Forgetting or counterfactual rows that entered a gradient computation.
    pub forget_rows_used: usize,
}

pub(crate) fn ensure_finite(method: &str, loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence(method.to_string()))
    }
}
