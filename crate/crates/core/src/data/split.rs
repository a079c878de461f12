use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// How the forgetting set is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSpec {
    /// A seeded random `fraction` of all training samples.
    RandomFraction { fraction: f64 },
    /// Every sample of the listed classes.
    ClassRemoval { class_ids: Vec<usize> },
}

impl SplitSpec {
    pub fn task(&self) -> Task {
        match self {
            SplitSpec::RandomFraction { .. } => Task::RandomRemoval,
            SplitSpec::ClassRemoval { .. } => Task::ClassRemoval,
        }
    }

    pub fn validate(&self, num_classes: Option<usize>) -> Result<()> {
        match self {
            SplitSpec::RandomFraction { fraction } => {
                if !(*fraction > 0.0 && *fraction < 1.0) {
                    return Err(Error::Config(format!(
                        "fraction must lie in (0, 1), got {fraction}"
                    )));
                }
            }
            SplitSpec::ClassRemoval { class_ids } => {
                if class_ids.is_empty() {
                    return Err(Error::Config("class_ids must not be empty".into()));
                }
                if let Some(k) = num_classes {
                    if let Some(bad) = class_ids.iter().find(|&&c| c >= k) {
                        return Err(Error::Domain(format!(
                            "class {bad} does not exist in a {k}-class dataset"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The two removal scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    RandomRemoval,
    ClassRemoval,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::RandomRemoval => "random_removal",
            Task::ClassRemoval => "class_removal",
        }
    }
}

/// Forgetting and remaining partitions of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub forget: Dataset,
    pub remain: Dataset,
    /// Source row of every forgetting sample, ascending.
    pub forget_indices: Vec<usize>,
    /// Source row of every remaining sample, ascending.
    pub remain_indices: Vec<usize>,
}

/// Partitions `dataset` into forgetting and remaining data.
///
/// Random mode takes `round(fraction * n)` rows of a seeded shuffle. Class
/// mode takes every row whose label is listed; listing a class with no
/// samples is an error. Both partitions keep the original row order.
pub fn split(dataset: &Dataset, spec: &SplitSpec, seed: u64) -> Result<Split> {
    spec.validate(Some(dataset.num_classes()))?;
    let n = dataset.len();
    let in_forget: Vec<bool> = match spec {
        SplitSpec::RandomFraction { fraction } => {
            let k = (fraction * n as f64).round() as usize;
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng::stream(seed, Purpose::Split));
            let mut mark = vec![false; n];
            for &i in &order[..k] {
                mark[i] = true;
            }
            mark
        }
        SplitSpec::ClassRemoval { class_ids } => {
            let counts = dataset.class_counts();
            if let Some(absent) = class_ids.iter().find(|&&c| counts[c] == 0) {
                return Err(Error::Domain(format!("class {absent} has no samples")));
            }
            let classes: BTreeSet<usize> = class_ids.iter().copied().collect();
            dataset.labels().iter().map(|y| classes.contains(y)).collect()
        }
    };
    let (forget_indices, remain_indices): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&i| in_forget[i]);
    Ok(Split {
        forget: dataset.subset(&forget_indices),
        remain: dataset.subset(&remain_indices),
        forget_indices,
        remain_indices,
    })
}
