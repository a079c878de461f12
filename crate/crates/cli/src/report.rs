//! CSV and text renderings of metrics.
//!
//! CSV files carry full-precision values (shortest round-trip formatting);
//! only the summary table rounds to two decimals.

use camu::eval::{MetricsReport, RelearnCurve};

use crate::config::Method;

/// Bumped whenever a column is added, removed or reinterpreted.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const METRIC_COLUMNS: [&str; 10] = [
    "method",
    "task",
    "seed",
    "R_tr",
    "F_tr",
    "Ts",
    "R_ts",
    "F_ts",
    "mia",
    "wall_time_seconds",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn seeds(r: &MetricsReport) -> String {
    r.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii output")
}

/// One row per report; averaged reports list their seeds separated by `;`.
pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRIC_COLUMNS).expect("in-memory writer");
    for r in reports {
        let [r_tr, f_tr, ts, r_ts, f_ts] = r.accuracy_fields();
        w.write_record([
            r.method.clone(),
            r.task.as_str().to_string(),
            seeds(r),
            opt(r_tr),
            opt(f_tr),
            opt(ts),
            opt(r_ts),
            opt(f_ts),
            r.mia.to_string(),
            r.wall_time_seconds.to_string(),
        ])
        .expect("in-memory writer");
    }
    finish(w)
}

/// Long format: `method, seed, epoch, gap`, epoch 0 being before relearning.
pub fn relearn_csv(curves: &[(Method, u64, RelearnCurve)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "seed", "epoch", "gap"]).expect("in-memory writer");
    for (method, seed, curve) in curves {
        for (epoch, gap) in curve.gaps.iter().enumerate() {
            w.write_record([
                method.name().to_string(),
                seed.to_string(),
                epoch.to_string(),
                gap.to_string(),
            ])
            .expect("in-memory writer");
        }
    }
    finish(w)
}

/// Fixed-width table of averaged metrics, two decimals.
pub fn summary_table(averaged: &[MetricsReport]) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
    let mut out = format!(
        "{:<32} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>10}\n",
        "method", "R_tr", "F_tr", "Ts", "R_ts", "F_ts", "MIA", "time(s)"
    );
    for r in averaged {
        let [r_tr, f_tr, ts, r_ts, f_ts] = r.accuracy_fields();
        out += &format!(
            "{:<32} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>10}\n",
            r.method,
            cell(r_tr),
            cell(f_tr),
            cell(ts),
            cell(r_ts),
            cell(f_ts),
            cell(Some(r.mia)),
            format!("{:.3}", r.wall_time_seconds),
        );
    }
    out
}
