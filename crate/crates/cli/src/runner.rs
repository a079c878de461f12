use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use camu::data::{self, load_idx, Dataset, JointDataset, Split, SplitSpec};
use camu::eval::{self, EvalData, MetricsReport, RelearnCurve, RelearnProbe};
use camu::nn::{Architecture, Model};
use camu::unlearn::{self, TrainConfig, UnlearnConfig};
use serde::Serialize;

use crate::config::{validate, DatasetConfig, ExperimentConfig, Method};
use crate::report;
use crate::RunError;

pub const RUNS_FILE: &str = "runs.csv";
pub const AVERAGED_FILE: &str = "averaged.csv";
pub const RELEARN_FILE: &str = "relearn.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Inventory of one finished run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub csv_schema_version: u32,
    pub config_hash: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub files: Vec<PathBuf>,
}

/// Everything a run produced, in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub reports: Vec<MetricsReport>,
    pub averaged: Vec<MetricsReport>,
    pub relearn: Vec<(Method, u64, RelearnCurve)>,
}

/// Training and test data of an experiment.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: Dataset,
    pub test: Dataset,
}

pub fn load_data(config: &DatasetConfig) -> Result<LoadedData, RunError> {
    match config {
        DatasetConfig::Synthetic {
            blobs,
            test_per_class,
        } => {
            let (train, test) = blobs.generate_with_holdout(*test_per_class).map_err(RunError::Data)?;
            Ok(LoadedData { train, test })
        }
        DatasetConfig::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            max_train,
            max_test,
        } => {
            let truncate = |ds: Dataset, max: &Option<usize>| match max {
                Some(m) if *m < ds.len() => ds.subset(&(0..*m).collect::<Vec<_>>()),
                _ => ds,
            };
            let train = truncate(load_idx(train_images, train_labels).map_err(RunError::Data)?, max_train);
            let test = truncate(load_idx(test_images, test_labels).map_err(RunError::Data)?, max_test);
            if train.dim() != test.dim() {
                return Err(RunError::Data(camu::Error::Domain(format!(
                    "training images have {} pixels, test images {}",
                    train.dim(),
                    test.dim()
                ))));
            }
            let k = train.num_classes().max(test.num_classes());
            Ok(LoadedData {
                train: train.with_num_classes(k).map_err(RunError::Data)?,
                test: test.with_num_classes(k).map_err(RunError::Data)?,
            })
        }
    }
}

pub fn train_config(config: &ExperimentConfig, data: &Dataset, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: config.train.epochs,
        learning_rate: config.train.learning_rate,
        batch_size: config.train.batch_size,
        seed,
        architecture: Architecture {
            input_dim: data.dim(),
            extractor: config.architecture.extractor.clone(),
            head: config.architecture.head.clone(),
            num_classes: data.num_classes(),
        },
    }
}

pub fn unlearn_config(config: &ExperimentConfig, method: Method, seed: u64) -> UnlearnConfig {
    UnlearnConfig {
        epochs: config.unlearn.epochs,
        learning_rate: config.unlearn.learning_rate,
        batch_size: config.unlearn.batch_size,
        seed,
        use_counterfactual: method != Method::CamuAblationNoCounterfactual,
        use_repr_alignment: method != Method::CamuAblationNoReprAlignment,
        ascent_weight: config.unlearn.ascent_weight,
    }
}

/// Relearning reuses the training learning rate and batch size.
fn relearn_config(config: &ExperimentConfig, seed: u64) -> UnlearnConfig {
    UnlearnConfig {
        epochs: config.relearn_epochs.max(1),
        learning_rate: config.train.learning_rate,
        batch_size: config.train.batch_size,
        seed,
        ..UnlearnConfig::default()
    }
}

/// Per-seed state shared by all methods.
pub struct SeedContext<'a> {
    pub config: &'a ExperimentConfig,
    pub data: &'a LoadedData,
    pub seed: u64,
    pub original: Model,
    pub split: Split,
    pub joint: JointDataset,
}

impl<'a> SeedContext<'a> {
    pub fn prepare(config: &'a ExperimentConfig, data: &'a LoadedData, seed: u64) -> Result<Self, RunError> {
        let original = unlearn::train(&data.train, &train_config(config, &data.train, seed))
            .map_err(|e| RunError::from_core("train", e))?;
        let split = data::split(&data.train, &config.task, seed).map_err(RunError::Data)?;
        let joint = data::prepare_joint(&split.forget, &split.remain, seed, config.unlearn.oversample_to)
            .map_err(RunError::Data)?;
        Ok(SeedContext {
            config,
            data,
            seed,
            original,
            split,
            joint,
        })
    }

    /// Runs one method; returns the resulting model and its wall time.
    pub fn run_method(&self, method: Method) -> Result<(Model, f64), RunError> {
        let ucfg = unlearn_config(self.config, method, self.seed);
        let wrap = |e| RunError::from_core(method.name(), e);
        let (model, secs) = match method {
            Method::Retrain => {
                let started = Instant::now();
                let tcfg = train_config(self.config, &self.split.remain, self.seed);
                let model = unlearn::retrain(&self.split.remain, &tcfg).map_err(wrap)?;
                (model, started.elapsed().as_secs_f64())
            }
            Method::Finetune => {
                let r = unlearn::finetune(&self.original, &self.split.remain, &ucfg).map_err(wrap)?;
                (r.model, r.wall_time_seconds)
            }
            Method::NegGrad => {
                let r = unlearn::neg_grad(&self.original, &self.split.forget, &self.split.remain, &ucfg)
                    .map_err(wrap)?;
                (r.model, r.wall_time_seconds)
            }
            Method::Camu | Method::CamuAblationNoCounterfactual | Method::CamuAblationNoReprAlignment => {
                let r = unlearn::camu(&self.original, &self.joint, &ucfg).map_err(wrap)?;
                (r.model, r.wall_time_seconds)
            }
        };
        if !model.is_finite() {
            return Err(RunError::Divergence(method.name().to_string()));
        }
        Ok((model, secs))
    }

    pub fn eval_data(&self) -> EvalData<'_> {
        EvalData {
            spec: &self.config.task,
            split: &self.split,
            test: &self.data.test,
        }
    }

    pub fn evaluate(&self, method: Method, model: &Model, secs: f64) -> Result<MetricsReport, RunError> {
        eval::evaluate(method.name(), model, self.eval_data(), secs, self.seed)
            .map_err(|e| RunError::from_core(method.name(), e))
    }

    pub fn relearn(&self, method: Method, model: &Model, epochs: usize) -> Result<RelearnCurve, RunError> {
        let class_sets = self.eval_data().class_test_sets();
        let probe = match (&self.config.task, &class_sets) {
            (SplitSpec::ClassRemoval { .. }, Some((kept, removed))) => RelearnProbe {
                remain: kept,
                forget: removed,
            },
            _ => RelearnProbe {
                remain: &self.split.remain,
                forget: &self.split.forget,
            },
        };
        eval::relearn_curve(model, &self.split.remain, probe, epochs, &relearn_config(self.config, self.seed))
            .map_err(|e| RunError::from_core(method.name(), e))
    }
}

/// Runs every (seed, method) pair in order and writes the reports.
pub fn run(config: &ExperimentConfig, write_summary: bool) -> Result<RunOutcome, RunError> {
    let diagnostics = validate(config);
    if !diagnostics.is_empty() {
        return Err(RunError::Config(diagnostics));
    }
    let started_unix = unix_now();
    let data = load_data(&config.dataset)?;
    // class ids can only be checked against IDX data once it is loaded
    config.task.validate(Some(data.train.num_classes())).map_err(RunError::Data)?;

    let mut reports = Vec::new();
    let mut relearn = Vec::new();
    for &seed in &config.seeds {
        let ctx = SeedContext::prepare(config, &data, seed)?;
        for &method in &config.methods {
            let (model, secs) = ctx.run_method(method)?;
            reports.push(ctx.evaluate(method, &model, secs)?);
            if config.relearn_epochs > 0 {
                relearn.push((method, seed, ctx.relearn(method, &model, config.relearn_epochs)?));
            }
        }
    }

    let mut averaged = Vec::new();
    for &method in &config.methods {
        let per_seed: Vec<MetricsReport> = reports
            .iter()
            .filter(|r| r.method == method.name())
            .cloned()
            .collect();
        averaged.push(eval::average_reports(&per_seed).map_err(RunError::Data)?);
    }

    let out = &config.output_dir;
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, body: String| -> Result<(), RunError> {
        let path = out.join(name);
        fs::write(&path, body)?;
        files.push(path);
        Ok(())
    };
    emit(RUNS_FILE, report::metrics_csv(&reports))?;
    emit(AVERAGED_FILE, report::metrics_csv(&averaged))?;
    if config.relearn_epochs > 0 {
        emit(RELEARN_FILE, report::relearn_csv(&relearn))?;
    }
    if write_summary {
        emit(SUMMARY_FILE, report::summary_table(&averaged))?;
    }
    files.push(out.join(MANIFEST_FILE));

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        csv_schema_version: report::CSV_SCHEMA_VERSION,
        config_hash: config.hash(),
        started_unix,
        finished_unix: unix_now(),
        files,
    };
    write_manifest(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(RunOutcome {
        manifest,
        reports,
        averaged,
        relearn,
    })
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), RunError> {
    let body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(path, body + "\n")?;
    Ok(())
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}
