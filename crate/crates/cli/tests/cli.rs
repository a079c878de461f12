use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use camu_cli::report::METRIC_COLUMNS;
use camu_cli::{run, validate, ExperimentConfig, Method, RunError};

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn tiny() -> ExperimentConfig {
    ExperimentConfig::load(&repo_path("configs/tiny.toml")).unwrap()
}

fn camu_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_camu")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

/// CSV rows with the timing column dropped.
fn untimed_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), METRIC_COLUMNS);
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            r.iter().take(METRIC_COLUMNS.len() - 1).map(str::to_string).collect()
        })
        .collect()
}

#[test]
fn shipped_configs_validate() {
    for name in ["tiny", "random_removal", "class_removal", "mnist"] {
        let cfg = ExperimentConfig::load(&repo_path(&format!("configs/{name}.toml"))).unwrap();
        assert!(validate(&cfg).is_empty(), "{name}: {:?}", validate(&cfg));
    }
}

#[test]
fn row_counts_follow_seeds_and_methods() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny();
    cfg.output_dir = dir.path().join("one");
    cfg.seeds = vec![0];
    cfg.methods = vec![Method::Camu];
    let outcome = run(&cfg, false).unwrap();
    assert_eq!((outcome.reports.len(), outcome.averaged.len()), (1, 1));
    assert_eq!(untimed_rows(&cfg.output_dir.join("runs.csv")).len(), 1);

    cfg.output_dir = dir.path().join("ten");
    cfg.seeds = vec![0, 1, 2, 3, 4];
    cfg.methods = vec![Method::Retrain, Method::Camu];
    let outcome = run(&cfg, false).unwrap();
    assert_eq!((outcome.reports.len(), outcome.averaged.len()), (10, 2));
    assert_eq!(untimed_rows(&cfg.output_dir.join("runs.csv")).len(), 10);
    let averaged = untimed_rows(&cfg.output_dir.join("averaged.csv"));
    assert_eq!(averaged[0][2], "0;1;2;3;4");
}

#[test]
fn random_task_leaves_class_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny();
    cfg.output_dir = dir.path().to_path_buf();
    cfg.seeds = vec![0];
    run(&cfg, false).unwrap();
    for row in untimed_rows(&dir.path().join("runs.csv")) {
        assert_eq!(row[1], "random_removal");
        assert!(!row[3].is_empty() && !row[5].is_empty());
        assert!(row[6].is_empty() && row[7].is_empty());
    }
}

#[test]
fn manifest_lists_outputs_and_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny();
    cfg.output_dir = dir.path().to_path_buf();
    let outcome = run(&cfg, true).unwrap();
    let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["config_hash"], cfg.hash());
    assert_eq!(json["csv_schema_version"], 1);
    let files = json["files"].as_array().unwrap();
    assert_eq!(files.len(), outcome.manifest.files.len());
    for f in &outcome.manifest.files {
        assert!(f.exists(), "{} missing", f.display());
    }
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn golden_runs_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo_path("configs/tiny.toml");
    let out = dir.path().to_str().unwrap();
    let status = camu_bin(&["run", "--config", config.to_str().unwrap(), "--out", out, "--seed", "0"]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let rows = untimed_rows(&dir.path().join("runs.csv"));
    let body: String = rows.iter().map(|r| r.join(",") + "\n").collect();
    let golden = fs::read_to_string(repo_path("crates/cli/tests/golden/tiny_runs.csv")).unwrap();
    assert_eq!(body, golden);
}

#[test]
fn two_runs_write_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo_path("configs/tiny.toml");
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = camu_bin(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(status.status.success());
    }
    for file in ["runs.csv", "averaged.csv"] {
        assert_eq!(
            untimed_rows(&dir.path().join("a").join(file)),
            untimed_rows(&dir.path().join("b").join(file))
        );
    }
    assert_eq!(
        fs::read(dir.path().join("a/relearn.csv")).unwrap(),
        fs::read(dir.path().join("b/relearn.csv")).unwrap()
    );
}

#[test]
fn invalid_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(repo_path("configs/tiny.toml"))
        .unwrap()
        .replace("fraction = 0.2", "fraction = 1.5");
    let path = write_config(dir.path(), &text);
    let out = camu_bin(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("task.fraction"));

    let out = camu_bin(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    assert_eq!(camu_bin(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn missing_data_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(repo_path("configs/mnist.toml"))
        .unwrap()
        .replace("data/mnist", dir.path().join("absent").to_str().unwrap());
    let path = write_config(dir.path(), &text);
    let out = camu_bin(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn divergence_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(repo_path("configs/tiny.toml"))
        .unwrap()
        .replace("ascent_weight = 0.1", "ascent_weight = 10.0")
        .replace(r#"methods = ["retrain", "finetune", "neg_grad", "camu"]"#, r#"methods = ["neg_grad"]"#)
        .replace("epochs = 2\nlearning_rate = 0.01", "epochs = 200\nlearning_rate = 0.5");
    let path = write_config(dir.path(), &text);
    let out = camu_bin(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));

    let mut cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    cfg.output_dir = dir.path().join("lib");
    assert!(matches!(run(&cfg, false), Err(RunError::Divergence(m)) if m == "neg_grad"));
}

#[test]
fn seed_flags_replace_the_config_list() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo_path("configs/tiny.toml");
    let out = dir.path().to_str().unwrap();
    let res = camu_bin(&["run", "--config", config.to_str().unwrap(), "--out", out, "--seed", "7", "--seed", "9"]);
    assert!(res.status.success());
    let seeds: Vec<String> = untimed_rows(&dir.path().join("runs.csv")).into_iter().map(|r| r[2].clone()).collect();
    assert!(seeds.iter().all(|s| s == "7" || s == "9"));
    assert_eq!(seeds.len(), 8);
}

#[test]
fn book_config_example_is_valid() {
    let chapter = fs::read_to_string(repo_path("book/src/experiments.md")).unwrap();
    let start = chapter.find("```toml\n").unwrap() + "```toml\n".len();
    let len = chapter[start..].find("```").unwrap();
    let cfg = ExperimentConfig::from_toml_str(&chapter[start..start + len]).unwrap();
    assert!(validate(&cfg).is_empty());
    assert_eq!(cfg.methods.len(), 4);
}
