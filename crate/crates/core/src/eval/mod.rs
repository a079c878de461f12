//! Accuracy metrics, membership inference and relearning curves.

mod accuracy;
mod mia;
mod relearn;
mod report;

pub use accuracy::{accuracy, argmax, predict_labels};
pub use mia::{mia_from_losses, mia_success_rate};
pub use relearn::{relearn_curve, RelearnCurve, RelearnProbe};
pub use report::{average_reports, evaluate, EvalData, MetricsReport};
