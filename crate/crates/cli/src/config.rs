//! Experiment configuration files.
//!
//! A config is one TOML document; command-line flags override `seeds` and
//! `output_dir` after it is parsed.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use camu::data::{BlobSpec, SplitSpec};
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub architecture: LayerWidths,
    pub train: TrainSection,
    pub unlearn: UnlearnSection,
    pub task: SplitSpec,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub relearn_epochs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("camu-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    /// Gaussian clusters with a held-out test split.
    Synthetic {
        #[serde(flatten)]
        blobs: BlobSpec,
        test_per_class: usize,
    },
    /// IDX image/label pairs, optionally truncated to their first rows.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default)]
        max_train: Option<usize>,
        #[serde(default)]
        max_test: Option<usize>,
    },
}

/// Hidden widths; input and output widths come from the data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerWidths {
    pub extractor: Vec<usize>,
    #[serde(default)]
    pub head: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnlearnSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    #[serde(default = "one")]
    pub ascent_weight: f64,
    /// Build this many tuples by cycling through a small forgetting set.
    #[serde(default)]
    pub oversample_to: Option<usize>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Retrain,
    Finetune,
    NegGrad,
    Camu,
    CamuAblationNoCounterfactual,
    CamuAblationNoReprAlignment,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Retrain,
        Method::Finetune,
        Method::NegGrad,
        Method::Camu,
        Method::CamuAblationNoCounterfactual,
        Method::CamuAblationNoReprAlignment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Retrain => "retrain",
            Method::Finetune => "finetune",
            Method::NegGrad => "neg_grad",
            Method::Camu => "camu",
            Method::CamuAblationNoCounterfactual => "camu_ablation_no_counterfactual",
            Method::CamuAblationNoReprAlignment => "camu_ablation_no_repr_alignment",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(vec![Diagnostic {
            field: "<file>".into(),
            message: e.to_string(),
        }]))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            RunError::Config(vec![Diagnostic {
                field: "--config".into(),
                message: format!("cannot read {}: {e}", path.display()),
            }])
        })?;
        Self::from_toml_str(&text)
    }

    /// Canonical JSON of the effective configuration, used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Every constraint the config violates; empty when it is runnable.
pub fn validate(config: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut flag = |field: &str, message: String| {
        out.push(Diagnostic {
            field: field.into(),
            message,
        })
    };

    if config.methods.is_empty() {
        flag("methods", "at least one method is required".into());
    }
    let distinct: BTreeSet<_> = config.methods.iter().collect();
    if distinct.len() != config.methods.len() {
        flag("methods", "methods must not repeat".into());
    }
    if config.seeds.is_empty() {
        flag("seeds", "at least one seed is required".into());
    }
    let distinct: BTreeSet<_> = config.seeds.iter().collect();
    if distinct.len() != config.seeds.len() {
        flag("seeds", "seeds must not repeat".into());
    }

    let mut num_classes = None;
    match &config.dataset {
        DatasetConfig::Synthetic {
            blobs,
            test_per_class,
        } => {
            if let Err(e) = blobs.validate() {
                flag("dataset", e.to_string());
            }
            if *test_per_class == 0 {
                flag("dataset.test_per_class", "must be at least 1".into());
            }
            num_classes = Some(blobs.num_classes);
        }
        DatasetConfig::Idx {
            max_train,
            max_test,
            ..
        } => {
            if *max_train == Some(0) {
                flag("dataset.max_train", "must be at least 1".into());
            }
            if *max_test == Some(0) {
                flag("dataset.max_test", "must be at least 1".into());
            }
        }
    }

    if let Some(i) = config
        .architecture
        .extractor
        .iter()
        .chain(&config.architecture.head)
        .position(|&w| w == 0)
    {
        flag("architecture", format!("layer {i} has width 0"));
    }

    positive(&mut flag, "train.epochs", config.train.epochs);
    positive(&mut flag, "train.batch_size", config.train.batch_size);
    rate(&mut flag, "train.learning_rate", config.train.learning_rate);
    positive(&mut flag, "unlearn.epochs", config.unlearn.epochs);
    positive(&mut flag, "unlearn.batch_size", config.unlearn.batch_size);
    rate(&mut flag, "unlearn.learning_rate", config.unlearn.learning_rate);
    rate(&mut flag, "unlearn.ascent_weight", config.unlearn.ascent_weight);
    if config.unlearn.oversample_to == Some(0) {
        flag("unlearn.oversample_to", "must be at least 1 when set".into());
    }

    match &config.task {
        SplitSpec::RandomFraction { fraction } => {
            if !(*fraction > 0.0 && *fraction < 1.0) {
                flag("task.fraction", format!("{fraction} is outside (0, 1)"));
            }
        }
        SplitSpec::ClassRemoval { class_ids } => {
            if class_ids.is_empty() {
                flag("task.class_ids", "at least one class is required".into());
            }
            if let Some(k) = num_classes {
                if let Some(bad) = class_ids.iter().find(|&&c| c >= k) {
                    flag("task.class_ids", format!("class {bad} outside [0, {k})"));
                }
                if class_ids.iter().collect::<BTreeSet<_>>().len() >= k {
                    flag("task.class_ids", "at least one class must remain".into());
                }
            }
        }
    }
    out
}

fn positive(flag: &mut impl FnMut(&str, String), field: &str, value: usize) {
    if value == 0 {
        flag(field, "must be at least 1".into());
    }
}

fn rate(flag: &mut impl FnMut(&str, String), field: &str, value: f64) {
    if !(value.is_finite() && value >= 0.0) {
        flag(field, format!("{value} is not a finite non-negative number"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
methods = ["retrain", "camu"]
seeds = [0, 1]
relearn_epochs = 2

[dataset]
kind = "synthetic"
num_classes = 3
per_class = 20
test_per_class = 10
dim = 4
spread = 0.2

[architecture]
extractor = [8, 6]

[train]
epochs = 2
learning_rate = 0.1
batch_size = 8

[unlearn]
epochs = 1
learning_rate = 0.01
batch_size = 8

[task]
mode = "random_fraction"
fraction = 0.1
"#;

    fn sample() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(SAMPLE).unwrap()
    }

    #[test]
    fn sample_is_valid() {
        let cfg = sample();
        assert!(validate(&cfg).is_empty());
        assert_eq!(cfg.methods, vec![Method::Retrain, Method::Camu]);
        assert_eq!(cfg.output_dir, PathBuf::from("camu-out"));
    }

    #[test]
    fn empty_methods_name_the_field() {
        let mut cfg = sample();
        cfg.methods.clear();
        let d = validate(&cfg);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "methods");
    }

    #[test]
    fn fraction_out_of_range() {
        let mut cfg = sample();
        cfg.task = SplitSpec::RandomFraction { fraction: 1.5 };
        let d = validate(&cfg);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "task.fraction");
    }

    #[test]
    fn class_ids_checked_against_synthetic_classes() {
        let mut cfg = sample();
        cfg.task = SplitSpec::ClassRemoval { class_ids: vec![3] };
        assert_eq!(validate(&cfg)[0].field, "task.class_ids");
        cfg.task = SplitSpec::ClassRemoval { class_ids: vec![0, 1, 2] };
        assert_eq!(validate(&cfg)[0].field, "task.class_ids");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = SAMPLE.replace("relearn_epochs = 2", "relearn_epochs = 2\nbogus = 1");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = sample();
        let mut b = sample();
        assert_eq!(a.hash(), b.hash());
        b.seeds.push(7);
        assert_ne!(a.hash(), b.hash());
    }
}
