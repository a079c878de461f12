//! Experiment runner: train, split, build counterfactual tuples, unlearn with
//! each requested method, evaluate and relearn, for every seed.

pub mod config;
pub mod report;
pub mod runner;

use std::fmt;

pub use config::{validate, Diagnostic, ExperimentConfig, Method};
pub use runner::{run, RunManifest, RunOutcome};

/// Why a run stopped. [`RunError::exit_code`] maps each kind to the
/// process exit status.
#[derive(Debug)]
pub enum RunError {
    Config(Vec<Diagnostic>),
    Data(camu::Error),
    Divergence(String),
    Failed(String, camu::Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) => 3,
            RunError::Divergence(_) => 4,
            RunError::Failed(..) | RunError::Io(_) => 1,
        }
    }

    pub(crate) fn from_core(method: &str, e: camu::Error) -> Self {
        match e {
            camu::Error::Divergence(_) => RunError::Divergence(method.to_string()),
            camu::Error::Config(msg) => RunError::Config(vec![Diagnostic {
                field: method.to_string(),
                message: msg,
            }]),
            other => RunError::Failed(method.to_string(), other),
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(diags) => {
                write!(f, "invalid configuration")?;
                for d in diags {
                    write!(f, "\n  {d}")?;
                }
                Ok(())
            }
            RunError::Data(e) => write!(f, "cannot load data: {e}"),
            RunError::Divergence(method) => write!(f, "{method} diverged: non-finite loss or parameters"),
            RunError::Failed(method, e) => write!(f, "{method} failed: {e}"),
            RunError::Io(e) => write!(f, "cannot write reports: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}
