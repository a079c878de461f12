//! Softmax, cross-entropy and KL divergence with their logit gradients.
//!
//! All functions work on logits and normalize internally with a max-shifted
//! log-sum-exp, so arbitrarily confident logits never overflow. Batch losses
//! are means over rows and the returned gradients already carry the `1/batch`
//! factor.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Row-wise `log softmax`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&z| (z - max).exp()).sum();
    let log_norm = max + sum.ln();
    logits.iter().map(|&z| z - log_norm).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Applies [`softmax`] to every row.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(logits.rows(), logits.cols());
    for (i, row) in logits.iter_rows().enumerate() {
        out.row_mut(i).copy_from_slice(&softmax(row));
    }
    out
}

/// A scalar batch loss and its gradient with respect to the logits.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grad: Tensor,
}

fn check_labels(logits: &Tensor, labels: &[usize], context: &str) -> Result<()> {
    if logits.rows() != labels.len() {
        return Err(Error::shape(
            context,
            format!("{} labels", logits.rows()),
            format!("{} labels", labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= logits.cols()) {
        return Err(Error::Domain(format!(
            "{context}: label {bad} outside [0, {})",
            logits.cols()
        )));
    }
    Ok(())
}

/// `-log softmax(logits)[label]` for each row.
pub fn per_sample_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    check_labels(logits, labels, "per_sample_cross_entropy")?;
    Ok(logits
        .iter_rows()
        .zip(labels)
        .map(|(row, &y)| -log_softmax(row)[y])
        .collect())
}

/// Mean cross-entropy over the batch; the gradient is `(softmax - onehot) / batch`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<LossOutput> {
    check_labels(logits, labels, "cross_entropy")?;
    if labels.is_empty() {
        return Err(Error::Precondition("cross_entropy on an empty batch".into()));
    }
    let n = labels.len() as f64;
    let mut grad = Tensor::zeros(logits.rows(), logits.cols());
    let mut total = 0.0;
    for (i, (row, &y)) in logits.iter_rows().zip(labels).enumerate() {
        let log_p = log_softmax(row);
        total -= log_p[y];
        let g = grad.row_mut(i);
        for (gj, lp) in g.iter_mut().zip(&log_p) {
            *gj = lp.exp() / n;
        }
        g[y] -= 1.0 / n;
    }
    Ok(LossOutput {
        loss: total / n,
        grad,
    })
}

/// Mean `KL(softmax(p) ‖ softmax(q))` and the gradients for both arguments.
#[derive(Debug, Clone)]
pub struct KlOutput {
    pub loss: f64,
    pub grad_p: Tensor,
    pub grad_q: Tensor,
}

/// Row-wise `Σ_i p_i (ln p_i - ln q_i)`, averaged over the batch.
///
/// Both gradients are returned; a caller treating one side as a fixed target
/// simply drops its gradient.
pub fn kl_divergence(logits_p: &Tensor, logits_q: &Tensor) -> Result<KlOutput> {
    if logits_p.shape() != logits_q.shape() {
        return Err(Error::shape(
            "kl_divergence",
            format!("{:?}", logits_p.shape()),
            format!("{:?}", logits_q.shape()),
        ));
    }
    if logits_p.rows() == 0 {
        return Err(Error::Precondition("kl_divergence on an empty batch".into()));
    }
    let n = logits_p.rows() as f64;
    let (rows, cols) = logits_p.shape();
    let mut grad_p = Tensor::zeros(rows, cols);
    let mut grad_q = Tensor::zeros(rows, cols);
    let mut total = 0.0;
    for i in 0..rows {
        let lp = log_softmax(logits_p.row(i));
        let lq = log_softmax(logits_q.row(i));
        let p: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
        let diff: Vec<f64> = lp.iter().zip(&lq).map(|(a, b)| a - b).collect();
        let kl: f64 = p.iter().zip(&diff).map(|(pi, d)| pi * d).sum();
        total += kl;
        // d/dz_p = p ⊙ (ln p - ln q - KL), d/dz_q = q - p
        for j in 0..cols {
            grad_p.set(i, j, p[j] * (diff[j] - kl) / n);
            grad_q.set(i, j, (lq[j].exp() - p[j]) / n);
        }
    }
    Ok(KlOutput {
        loss: total / n,
        grad_p,
        grad_q,
    })
}
