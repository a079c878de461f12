use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split, SplitSpec, Task};
use crate::error::{Error, Result};
use crate::eval::{accuracy, mia_success_rate};
use crate::nn::Model;
use crate::rng::{self, Purpose};

/// Metrics of one method on one task, for one seed or averaged over several.
///
/// Random removal fills `r_tr`, `f_tr` and `ts`; class removal fills `r_ts`
/// and `f_ts`. Both fill `mia`. All are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub task: Task,
    pub seeds: Vec<u64>,
    pub r_tr: Option<f64>,
    pub f_tr: Option<f64>,
    pub ts: Option<f64>,
    pub r_ts: Option<f64>,
    pub f_ts: Option<f64>,
    pub mia: f64,
    pub wall_time_seconds: f64,
}

impl MetricsReport {
    /// The accuracy metrics in column order `R_tr, F_tr, Ts, R_ts, F_ts`.
    pub fn accuracy_fields(&self) -> [Option<f64>; 5] {
        [self.r_tr, self.f_tr, self.ts, self.r_ts, self.f_ts]
    }
}

/// Everything a report is computed from besides the model.
#[derive(Debug, Clone, Copy)]
pub struct EvalData<'a> {
    pub spec: &'a SplitSpec,
    pub split: &'a Split,
    pub test: &'a Dataset,
}

impl EvalData<'_> {
    /// Test samples of the classes that were kept and of those removed.
    /// `None` for random removal.
    pub fn class_test_sets(&self) -> Option<(Dataset, Dataset)> {
        match self.spec {
            SplitSpec::ClassRemoval { class_ids } => {
                let removed: BTreeSet<usize> = class_ids.iter().copied().collect();
                Some((
                    self.test.filter_labels(|y| !removed.contains(&y)),
                    self.test.filter_labels(|y| removed.contains(&y)),
                ))
            }
            SplitSpec::RandomFraction { .. } => None,
        }
    }

    /// Forgetting samples as members and an equal-size seeded sample of the
    /// test set as nonmembers. When the test set is the smaller one, the
    /// members are subsampled instead.
    pub fn mia_sets(&self, seed: u64) -> (Dataset, Dataset) {
        let forget = &self.split.forget;
        let n = forget.len().min(self.test.len());
        let mut rng = rng::stream(seed, Purpose::Mia);
        let pick = |rng: &mut _, from: &Dataset| {
            if from.len() == n {
                from.clone()
            } else {
                let mut idx = index::sample(rng, from.len(), n).into_vec();
                idx.sort_unstable();
                from.subset(&idx)
            }
        };
        let nonmembers = pick(&mut rng, self.test);
        let members = pick(&mut rng, forget);
        (members, nonmembers)
    }
}

/// Computes the task's metric set for an unlearned (or retrained) model.
pub fn evaluate(
    method: &str,
    model: &Model,
    data: EvalData<'_>,
    wall_time_seconds: f64,
    seed: u64,
) -> Result<MetricsReport> {
    let task = data.spec.task();
    let mut report = MetricsReport {
        method: method.to_string(),
        task,
        seeds: vec![seed],
        r_tr: None,
        f_tr: None,
        ts: None,
        r_ts: None,
        f_ts: None,
        mia: 0.0,
        wall_time_seconds,
    };
    match data.class_test_sets() {
        None => {
            report.r_tr = Some(accuracy(model, &data.split.remain)?);
            report.f_tr = Some(accuracy(model, &data.split.forget)?);
            report.ts = Some(accuracy(model, data.test)?);
        }
        Some((kept, removed)) => {
            report.r_ts = Some(accuracy(model, &kept)?);
            report.f_ts = Some(accuracy(model, &removed)?);
        }
    }
    let (members, nonmembers) = data.mia_sets(seed);
    report.mia = mia_success_rate(model, &members, &nonmembers, seed)?;
    Ok(report)
}

/// Per-metric arithmetic mean over reports of one method and task.
pub fn average_reports(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Precondition("no reports to average".into()))?;
    if let Some(odd) = reports
        .iter()
        .find(|r| r.method != first.method || r.task != first.task)
    {
        return Err(Error::Domain(format!(
            "cannot average {} / {} with {} / {}",
            first.method,
            first.task.as_str(),
            odd.method,
            odd.task.as_str()
        )));
    }
    let n = reports.len() as f64;
    let mean_opt = |get: fn(&MetricsReport) -> Option<f64>| -> Result<Option<f64>> {
        let values: Vec<Option<f64>> = reports.iter().map(get).collect();
        match (values.iter().all(Option::is_some), values.iter().all(Option::is_none)) {
            (true, _) => Ok(Some(values.iter().flatten().sum::<f64>() / n)),
            (_, true) => Ok(None),
            _ => Err(Error::Domain("reports populate different metrics".into())),
        }
    };
    Ok(MetricsReport {
        method: first.method.clone(),
        task: first.task,
        seeds: reports.iter().flat_map(|r| r.seeds.iter().copied()).collect(),
        r_tr: mean_opt(|r| r.r_tr)?,
        f_tr: mean_opt(|r| r.f_tr)?,
        ts: mean_opt(|r| r.ts)?,
        r_ts: mean_opt(|r| r.r_ts)?,
        f_ts: mean_opt(|r| r.f_ts)?,
        mia: reports.iter().map(|r| r.mia).sum::<f64>() / n,
        wall_time_seconds: reports.iter().map(|r| r.wall_time_seconds).sum::<f64>() / n,
    })
}
