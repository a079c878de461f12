use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::Model;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn predict_labels(model: &Model, dataset: &Dataset) -> Result<Vec<usize>> {
    let logits = model.predict(dataset.features())?;
    Ok(logits.iter_rows().map(argmax).collect())
}

/// Percentage of samples whose argmax prediction equals the label.
pub fn accuracy(model: &Model, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Domain("accuracy of an empty dataset".into()));
    }
    let predicted = predict_labels(model, dataset)?;
    Ok(percent_correct(&predicted, dataset.labels()))
}

pub(crate) fn percent_correct(predicted: &[usize], labels: &[usize]) -> f64 {
    let correct = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    100.0 * correct as f64 / labels.len() as f64
}
