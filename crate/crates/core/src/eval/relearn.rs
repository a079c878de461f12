use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::accuracy;
use crate::nn::Model;
use crate::unlearn::{CrossEntropyEpochs, UnlearnConfig};

/// `accuracy(remaining probe) - accuracy(forgetting probe)` before relearning
/// (index 0) and after every relearning epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct RelearnCurve {
    pub gaps: Vec<f64>,
}

impl RelearnCurve {
    /// Largest minus smallest gap.
    pub fn spread(&self) -> f64 {
        let max = self.gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.gaps.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Sets the gap is measured on: training splits for random removal, test
/// samples of kept and removed classes for class removal.
#[derive(Debug, Clone, Copy)]
pub struct RelearnProbe<'a> {
    pub remain: &'a Dataset,
    pub forget: &'a Dataset,
}

/// Finetunes a copy of `model` on `remain` for `epochs` epochs and records the
/// probe gap after each. Learning rate, batch size and seed come from `config`.
pub fn relearn_curve(
    model: &Model,
    remain: &Dataset,
    probe: RelearnProbe<'_>,
    epochs: usize,
    config: &UnlearnConfig,
) -> Result<RelearnCurve> {
    if epochs == 0 {
        return Err(Error::Config("relearn epochs must be at least 1".into()));
    }
    if remain.is_empty() {
        return Err(Error::Precondition("remaining data is empty".into()));
    }
    let gap = |m: &Model| -> Result<f64> { Ok(accuracy(m, probe.remain)? - accuracy(m, probe.forget)?) };
    let mut model = model.clone();
    let mut runner = CrossEntropyEpochs::new(
        &model,
        remain.len(),
        config.learning_rate,
        config.batch_size,
        config.seed,
    )?;
    let mut gaps = Vec::with_capacity(epochs + 1);
    gaps.push(gap(&model)?);
    for _ in 0..epochs {
        runner.run(&mut model, remain, "relearn")?;
        gaps.push(gap(&model)?);
    }
    Ok(RelearnCurve { gaps })
}
