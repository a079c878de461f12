use crate::data::{BatchSchedule, Dataset};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, Model, Sgd, Upstream};
use crate::unlearn::{ensure_finite, TrainConfig};

/// Mini-batch SGD on mean cross-entropy from a fresh initialization.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<Model> {
    Ok(train_with_losses(dataset, config)?.0)
}

/// [`train`], also returning the mean batch loss of every epoch.
pub fn train_with_losses(dataset: &Dataset, config: &TrainConfig) -> Result<(Model, Vec<f64>)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Precondition("cannot train on an empty dataset".into()));
    }
    let arch = &config.architecture;
    if arch.input_dim != dataset.dim() {
        return Err(Error::shape("architecture input width", dataset.dim(), arch.input_dim));
    }
    if arch.num_classes < dataset.num_classes() {
        return Err(Error::shape(
            "architecture class count",
            dataset.num_classes(),
            arch.num_classes,
        ));
    }
    let mut model = Model::init(arch, config.seed)?;
    let losses = sgd_cross_entropy(
        &mut model,
        dataset,
        config.epochs,
        config.learning_rate,
        config.batch_size,
        config.seed,
        "train",
    )?;
    Ok((model, losses))
}

/// Training from scratch on the remaining data only.
pub fn retrain(remain: &Dataset, config: &TrainConfig) -> Result<Model> {
    train(remain, config)
}

/// Cross-entropy SGD epochs on `data`; returns per-epoch mean batch loss.
pub(crate) fn sgd_cross_entropy(
    model: &mut Model,
    data: &Dataset,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    seed: u64,
    method: &str,
) -> Result<Vec<f64>> {
    let mut runner = CrossEntropyEpochs::new(model, data.len(), learning_rate, batch_size, seed)?;
    (0..epochs).map(|_| runner.run(model, data, method)).collect()
}

/// Optimizer and batch schedule carried across cross-entropy epochs.
pub(crate) struct CrossEntropyEpochs {
    sgd: Sgd,
    schedule: BatchSchedule,
}

impl CrossEntropyEpochs {
    pub(crate) fn new(
        model: &Model,
        len: usize,
        learning_rate: f64,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(CrossEntropyEpochs {
            sgd: Sgd::new(model, learning_rate)?,
            schedule: BatchSchedule::new(len, batch_size, seed),
        })
    }

    /// One epoch; returns the mean batch loss.
    pub(crate) fn run(&mut self, model: &mut Model, data: &Dataset, method: &str) -> Result<f64> {
        let epoch = self.schedule.next_epoch();
        let mut total = 0.0;
        for batch in &epoch {
            let x = data.features().select_rows(batch);
            let y: Vec<usize> = batch.iter().map(|&i| data.labels()[i]).collect();
            let trace = model.forward(&x)?;
            let ce = cross_entropy(&trace.logits, &y)?;
            ensure_finite(method, ce.loss)?;
            total += ce.loss;
            self.sgd.backward_and_step(model, &[(&trace, &Upstream::logits(ce.grad))])?;
        }
        Ok(total / epoch.len().max(1) as f64)
    }
}
