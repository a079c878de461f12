use std::collections::VecDeque;
use std::time::Instant;

use crate::data::{BatchSchedule, Dataset};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, Model, Sgd, Upstream};
use crate::rng::Purpose;
use crate::unlearn::train::sgd_cross_entropy;
use crate::unlearn::{ensure_finite, EpochLoss, UnlearnConfig, UnlearnResult};

/// Continues training a copy of `original` on the remaining data only.
pub fn finetune(original: &Model, remain: &Dataset, config: &UnlearnConfig) -> Result<UnlearnResult> {
    config.validate()?;
    if remain.is_empty() {
        return Err(Error::Precondition("remaining data is empty".into()));
    }
    let started = Instant::now();
    let mut model = original.clone();
    let losses = sgd_cross_entropy(
        &mut model,
        remain,
        config.epochs,
        config.learning_rate,
        config.batch_size,
        config.seed,
        "finetune",
    )?;
    Ok(UnlearnResult {
        model,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        loss_trace: losses.into_iter().map(|ce| EpochLoss { kl: 0.0, ce }).collect(),
        forget_rows_used: 0,
    })
}

/// Gradient descent on remaining batches combined with gradient ascent on
/// forgetting batches: each step minimizes `CE(R batch) - w · CE(F batch)`.
///
/// Remaining batches follow the same schedule as [`finetune`]; forgetting
/// batches come from a separate stream and wrap around when exhausted. A
/// weight of zero skips the forgetting pass.
pub fn neg_grad(
    original: &Model,
    forget: &Dataset,
    remain: &Dataset,
    config: &UnlearnConfig,
) -> Result<UnlearnResult> {
    config.validate()?;
    if forget.is_empty() || remain.is_empty() {
        return Err(Error::Precondition(
            "gradient ascent needs non-empty forgetting and remaining data".into(),
        ));
    }
    let started = Instant::now();
    let weight = config.ascent_weight;
    let mut model = original.clone();
    let mut sgd = Sgd::new(&model, config.learning_rate)?;
    let mut remain_schedule = BatchSchedule::new(remain.len(), config.batch_size, config.seed);
    let mut forget_schedule = BatchSchedule::with_purpose(
        forget.len(),
        config.batch_size,
        config.seed,
        Purpose::AuxBatchOrder,
    );
    let mut forget_queue: VecDeque<Vec<usize>> = VecDeque::new();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut forget_rows_used = 0;

    for _ in 0..config.epochs {
        let epoch = remain_schedule.next_epoch();
        let mut total = 0.0;
        for batch in &epoch {
            let x = remain.features().select_rows(batch);
            let y: Vec<usize> = batch.iter().map(|&i| remain.labels()[i]).collect();
            let tr = model.forward(&x)?;
            let ce_r = cross_entropy(&tr.logits, &y)?;
            let up_r = Upstream::logits(ce_r.grad);
            let mut loss = ce_r.loss;

            if weight == 0.0 {
                ensure_finite("neg_grad", loss)?;
                sgd.backward_and_step(&mut model, &[(&tr, &up_r)])?;
            } else {
                if forget_queue.is_empty() {
                    forget_queue.extend(forget_schedule.next_epoch());
                }
                let fb = forget_queue.pop_front().expect("refilled above");
                let fx = forget.features().select_rows(&fb);
                let fy: Vec<usize> = fb.iter().map(|&i| forget.labels()[i]).collect();
                let tf = model.forward(&fx)?;
                let ce_f = cross_entropy(&tf.logits, &fy)?;
                loss -= weight * ce_f.loss;
                let up_f = Upstream::logits(ce_f.grad.scale(-weight));
                forget_rows_used += fb.len();
                ensure_finite("neg_grad", loss)?;
                sgd.backward_and_step(&mut model, &[(&tr, &up_r), (&tf, &up_f)])?;
            }
            total += loss;
        }
        loss_trace.push(EpochLoss {
            kl: 0.0,
            ce: total / epoch.len() as f64,
        });
    }
    if !model.is_finite() {
        return Err(Error::Divergence("neg_grad".into()));
    }
    Ok(UnlearnResult {
        model,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        loss_trace,
        forget_rows_used,
    })
}
