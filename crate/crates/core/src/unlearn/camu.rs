//! Counterfactual unlearning by alternating representation and output
//! alignment.
//!
//! Every batch of tuples takes two SGD steps on the unlearned model `g_u`,
//! always in this order:
//!
//! 1. Representation step, on the sum of
//!    * `KL(softmax(g_u^e(x_f)) ‖ softmax(g_u^e(x_f*)))`, gradients into both
//!      branches (counterfactual term), and
//!    * `KL(softmax(g_u^e(x_r)) ‖ softmax(g_o^e(x_r)))` against the frozen
//!      original extractor (alignment term).
//! 2. Output step, on `CE(g_u(x_f), y*) + CE(g_u(x_r), y_r)`, each a batch mean.
//!
//! Disabling `use_counterfactual` drops the first KL term and the `CE(x_f, y*)`
//! term; disabling `use_repr_alignment` drops the second KL term. With both
//! off only the remaining-sample cross-entropy is left and the representation
//! step is skipped.

use std::time::Instant;

use crate::data::{BatchSchedule, JointDataset};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, kl_divergence, ForwardTrace, Model, Sgd, Upstream};
use crate::unlearn::{ensure_finite, EpochLoss, UnlearnConfig, UnlearnResult};

const METHOD: &str = "camu";

pub fn camu(original: &Model, joint: &JointDataset, config: &UnlearnConfig) -> Result<UnlearnResult> {
    config.validate()?;
    if joint.is_empty() {
        return Err(Error::Precondition("joint dataset is empty".into()));
    }
    if joint.dim() != original.input_dim() {
        return Err(Error::shape("camu feature width", original.input_dim(), joint.dim()));
    }
    let started = Instant::now();
    let cf = config.use_counterfactual;
    let align = config.use_repr_alignment;

    let mut model = original.clone();
    let frozen_repr = if align {
        Some(original.representation(&joint.remain_x)?)
    } else {
        None
    };
    let mut sgd = Sgd::new(&model, config.learning_rate)?;
    let mut schedule = BatchSchedule::new(joint.len(), config.batch_size, config.seed);
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut forget_rows_used = 0;

    for _ in 0..config.epochs {
        let epoch = schedule.next_epoch();
        let (mut kl_total, mut ce_total) = (0.0, 0.0);
        for batch in &epoch {
            let remain_x = joint.remain_x.select_rows(batch);
            let remain_y: Vec<usize> = batch.iter().map(|&i| joint.remain_y[i]).collect();
            let forget_x = cf.then(|| joint.forget_x.select_rows(batch));

            if cf || align {
                let mut traces: Vec<ForwardTrace> = Vec::with_capacity(3);
                let mut upstreams: Vec<Upstream> = Vec::with_capacity(3);
                let mut kl_loss = 0.0;
                if let Some(fx) = &forget_x {
                    let cfx = joint.counterfactual_x.select_rows(batch);
                    let tf = model.forward(fx)?;
                    let tcf = model.forward(&cfx)?;
                    let kl = kl_divergence(&tf.representation, &tcf.representation)?;
                    kl_loss += kl.loss;
                    traces.extend([tf, tcf]);
                    upstreams.extend([
                        Upstream::representation(kl.grad_p),
                        Upstream::representation(kl.grad_q),
                    ]);
                    forget_rows_used += 2 * batch.len();
                }
                if let Some(frozen) = &frozen_repr {
                    let tr = model.forward(&remain_x)?;
                    let kl = kl_divergence(&tr.representation, &frozen.select_rows(batch))?;
                    kl_loss += kl.loss;
                    traces.push(tr);
                    upstreams.push(Upstream::representation(kl.grad_p));
                }
                ensure_finite(METHOD, kl_loss)?;
                kl_total += kl_loss;
                let passes: Vec<_> = traces.iter().zip(&upstreams).collect();
                sgd.backward_and_step(&mut model, &passes)?;
            }

            let mut traces: Vec<ForwardTrace> = Vec::with_capacity(2);
            let mut upstreams: Vec<Upstream> = Vec::with_capacity(2);
            let mut ce_loss = 0.0;
            if let Some(fx) = &forget_x {
                let target: Vec<usize> = batch.iter().map(|&i| joint.counterfactual_y[i]).collect();
                let tf = model.forward(fx)?;
                let ce = cross_entropy(&tf.logits, &target)?;
                ce_loss += ce.loss;
                traces.push(tf);
                upstreams.push(Upstream::logits(ce.grad));
                forget_rows_used += batch.len();
            }
            let tr = model.forward(&remain_x)?;
            let ce = cross_entropy(&tr.logits, &remain_y)?;
            ce_loss += ce.loss;
            traces.push(tr);
            upstreams.push(Upstream::logits(ce.grad));
            ensure_finite(METHOD, ce_loss)?;
            ce_total += ce_loss;
            let passes: Vec<_> = traces.iter().zip(&upstreams).collect();
            sgd.backward_and_step(&mut model, &passes)?;
        }
        let n = epoch.len() as f64;
        loss_trace.push(EpochLoss {
            kl: kl_total / n,
            ce: ce_total / n,
        });
    }

    Ok(UnlearnResult {
        model,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        loss_trace,
        forget_rows_used,
    })
}
