mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::fixture;
use serde_json::Value;

fn riskpipe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskpipe"))
        .args(args)
        .env("RISKPIPE_LOG_LEVEL", "off")
        .output()
        .expect("binary runs")
}

fn text(p: PathBuf) -> String {
    p.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn train(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train".to_owned(),
        "--data-config".into(),
        text(fixture("data_config.json")),
        "--algo-config".into(),
        text(fixture("algo_config.json")),
        "--data".into(),
        text(fixture("example.csv")),
        "--out".into(),
        out.to_str().unwrap().into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    riskpipe(&refs)
}

fn bundle_path(dir: &Path) -> PathBuf {
    dir.join("log_781_model.json")
}

#[test]
fn missing_data_flag_is_a_usage_error() {
    let o = riskpipe(&[
        "train",
        "--data-config",
        &text(fixture("data_config.json")),
        "--algo-config",
        &text(fixture("algo_config.json")),
        "--out",
        "unused",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("--data") && e.contains("Usage"), "{e}");
}

#[test]
fn help_exits_zero() {
    let o = riskpipe(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for cmd in ["train", "predict", "inspect"] {
        assert!(stdout(&o).contains(cmd));
    }
}

#[test]
fn invalid_configuration_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = common::write(dir.path(), "data.json", r#"{"labels": ["Type"], "phase": "sometimes"}"#);
    let o = riskpipe(&[
        "train",
        "--data-config",
        &text(bad),
        "--algo-config",
        &text(fixture("algo_config.json")),
        "--data",
        &text(fixture("example.csv")),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn missing_data_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = riskpipe(&[
        "train",
        "--data-config",
        &text(fixture("data_config.json")),
        "--algo-config",
        &text(fixture("algo_config.json")),
        "--data",
        &text(dir.path().join("absent.csv")),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("absent.csv"));
}

#[test]
fn train_lists_written_files_and_inspect_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = train(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let printed = stdout(&o);
    let listed: Vec<&str> = printed.lines().collect();
    assert_eq!(listed.len(), 3);
    for name in ["log_781_training.json", "log_781_model.json", "log_781.log"] {
        assert!(listed.iter().any(|l| l.ends_with(name)), "{listed:?}");
        assert!(dir.path().join(name).is_file());
    }

    let o = riskpipe(&["inspect", "--model", &text(bundle_path(dir.path()))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    for needle in ["AggClustering (clustering)", "n_clusters = 5", "linkage = \"average\"", "x1", "C=mid", "Silhouette"] {
        assert!(s.contains(needle), "missing {needle:?} in\n{s}");
    }
    assert!(!s.contains("\n  A\n"), "dropped feature listed:\n{s}");
}

#[test]
fn seed_flag_overrides_configuration() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(train(a.path(), &["--seed", "5"]).status.code(), Some(0));
    assert_eq!(train(b.path(), &[]).status.code(), Some(0));
    let seed = |d: &Path| -> Value {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(bundle_path(d)).unwrap()).unwrap();
        v["seed"].clone()
    };
    assert_eq!(seed(a.path()), Value::from(5));
    assert_ne!(seed(b.path()), Value::from(5));
}

#[test]
fn predict_with_listed_configuration() {
    let models = tempfile::tempdir().unwrap();
    assert_eq!(train(models.path(), &[]).status.code(), Some(0));
    let out = tempfile::tempdir().unwrap();
    let o = riskpipe(&[
        "predict",
        "--predict-config",
        &text(fixture("predict_config.json")),
        "--data",
        &text(fixture("example.csv")),
        "--bundles",
        models.path().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.path().join("log_781_predictions.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("Sample,prediction"));
    assert_eq!(lines.count(), 120);
    let result: Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("log_781_predict.json")).unwrap()).unwrap();
    assert!(result["testing_set"].is_object());
}

#[test]
fn inspect_rejects_non_bundle() {
    let o = riskpipe(&["inspect", "--model", &text(fixture("algo_config.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
}
