mod common;

use std::fs;

use common::*;
use riskpipe::config::{parse_predict_config, PredictConfig};
use riskpipe::engine::{
    bundle_to_string, load_bundle, predict_to_dir, resolve_bundle, run_predict_pretrained, run_training, save_bundle,
    train_to_dir,
};
use riskpipe::learners::{Family, Task};
use serde_json::{json, Value};

fn predict_config(description: &str) -> PredictConfig {
    parse_predict_config(
        &json!({
            "services": {"log_prefix": "run"},
            "runtime": {"run_id": 8},
            "dataset": {"name": "synthetic", "type": "point-in-time", "format": "csv"},
            "description": description,
        })
        .to_string(),
    )
    .unwrap()
}

#[test]
fn training_without_split_has_no_testing_block() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(60, 1));
    let (dc, ac) = family_setup(Family::RandomForest, Task::Classification, None, 3);
    let run = run_training(&dc, &ac, &data).unwrap();
    let out = run.result.to_json();
    assert!(out.get("testing_set").is_none());
    let m = &out["config_data"]["metrics_training"]["cls"];
    for key in ["accuracy", "precision", "recall", "f1", "hss", "mcc", "cross_entropy"] {
        assert!(m[key].is_number(), "{key} missing in {m}");
    }
    // three classes: the binary-only metrics are absent
    assert!(m.get("tss").is_none());
    assert!(out["feature_importances"].is_object());
}

#[test]
fn split_run_reports_testing_metrics_and_positive_class() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synthetic_csv(90, 2).replace(",gamma,", ",beta,");
    let data = write(dir.path(), "d.csv", &csv);
    let (dc, ac) = family_setup(Family::SgdClassifier, Task::Classification, Some(70), 4);
    let run = run_training(&dc, &ac, &data).unwrap();
    let out = run.result.to_json();
    assert!(out["testing_set"]["cls"]["tss"].is_number());
    assert_eq!(out["diagnostics"]["positive_class"], json!("beta"));
    assert_eq!(run.bundle.training_rows.len(), 63);
}

#[test]
fn regression_predictions_are_in_label_units() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(120, 3));
    let (dc, ac) = family_setup(Family::ElasticNet, Task::Regression, Some(75), 0);
    let run = run_training(&dc, &ac, &data).unwrap();
    let r2 = run.result.to_json()["testing_set"]["target"]["r2"].as_f64().unwrap();
    assert!(r2 > 0.9, "r2 {r2}");
    let mean_pred: f64 = run.bundle.training_predictions.iter().sum::<f64>() / run.bundle.training_predictions.len() as f64;
    assert!(mean_pred.abs() < 10.0 && mean_pred.abs() > 0.1, "{mean_pred}");
}

#[test]
fn clustering_without_labels_reports_internal_silhouette() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(60, 4));
    let dc = data_config(&DataSpec {
        labels: &[],
        group: "",
        drop: &["cls", "target"],
        categorical: &["color"],
        split: None,
        seed: 0,
    });
    let ac = algo_config(Family::KMeans, Task::Clustering, json!({"n_clusters": 3}), json!({}));
    let run = run_training(&dc, &ac, &data).unwrap();
    let out = run.result.to_json();
    let metrics = out["config_data"]["metrics_training"].as_object().unwrap();
    assert_eq!(metrics.keys().collect::<Vec<_>>(), ["internal"]);
    assert!(metrics["internal"]["Silhouette"].as_f64().unwrap() > 0.0);
}

#[test]
fn single_cluster_silhouette_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(30, 5));
    let (dc, _) = family_setup(Family::Dbscan, Task::Clustering, None, 0);
    let ac = algo_config(Family::Dbscan, Task::Clustering, json!({"eps": 100.0}), json!({}));
    let out = run_training(&dc, &ac, &data).unwrap().result.to_json();
    assert_eq!(out["config_data"]["metrics_training"]["cls"]["Silhouette"], json!(0.0));
    assert_eq!(
        out["diagnostics"]["degenerate_metrics"]["metrics_training.cls"],
        json!(["Silhouette"])
    );
}

#[test]
fn selection_extras_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(90, 6));
    let (dc, _) = family_setup(Family::RandomForest, Task::Classification, Some(80), 1);
    let ac = algo_config(
        Family::RandomForest,
        Task::Classification,
        json!({"n_estimators": [5, 10], "max_depth": 3}),
        json!({
            "cv_folds": 3,
            "rfe": {"enabled": true, "n_features_to_select": 3},
            "smote": {"enabled": true, "k_neighbors": 3},
            "shap": {"enabled": true, "mode": "exact"},
        }),
    );
    let run = run_training(&dc, &ac, &data).unwrap();
    let out = run.result.to_json();
    assert_eq!(out["cv_report"]["points"].as_array().unwrap().len(), 2);
    assert_eq!(out["rfe"]["retained"].as_array().unwrap().len(), 3);
    let shap = &out["shap_values"];
    assert_eq!(shap["mode"], json!("exact"));
    assert_eq!(shap["features"].as_array().unwrap().len(), 3);
    let rows = shap["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 18);
    // one attribution vector per class output, one value per retained feature
    assert_eq!(rows[0]["values"].as_array().unwrap().len(), 3);
    assert_eq!(rows[0]["values"][0].as_array().unwrap().len(), 3);
    assert_eq!(run.bundle.model.n_features, 3);
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(60, 7));
    let (dc, ac) = family_setup(Family::Mlp, Task::Classification, Some(80), 11);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    train_to_dir(&dc, &ac, &data, &a).unwrap();
    train_to_dir(&dc, &ac, &data, &b).unwrap();
    for name in ["run_7_training.json", "run_7_model.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn rerun_overwrites_and_says_so() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(45, 8));
    let (dc, ac) = family_setup(Family::Knn, Task::Classification, None, 0);
    let out = dir.path().join("out");
    train_to_dir(&dc, &ac, &data, &out).unwrap();
    let (run, files) = train_to_dir(&dc, &ac, &data, &out).unwrap();
    assert_eq!(files.len(), 3);
    assert!(run.log.iter().any(|l| l.contains("overwriting")));
    let log = fs::read_to_string(out.join("run_7.log")).unwrap();
    assert!(log.contains("overwriting"));
}

#[test]
fn stage_failures_name_the_stage_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "id,cls,x1\na,1,2\n");
    let (dc, ac) = family_setup(Family::Knn, Task::Classification, None, 0);
    let out = dir.path().join("out");
    let err = train_to_dir(&dc, &ac, &data, &out).unwrap_err().to_string();
    assert!(err.contains("stage load") && err.contains("run 7"), "{err}");
    let log = fs::read_to_string(out.join("run_7.log")).unwrap();
    assert!(log.contains("ERROR load"), "{log}");
}

#[test]
fn predict_with_and_without_labels() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(60, 9));
    let (dc, ac) = family_setup(Family::GradientBoosting, Task::Classification, None, 2);
    let bundles = dir.path().join("bundles");
    let (trained, _) = train_to_dir(&dc, &ac, &data, &bundles).unwrap();

    let pc = predict_config(&ac.description);
    let out = dir.path().join("pred");
    let (run, files) = predict_to_dir(&pc, &data, &bundles, &out).unwrap();
    assert_eq!(run.predictions, trained.bundle.training_predictions);
    let json: Value = serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert!(json["testing_set"]["cls"]["accuracy"].is_number());
    let csv = fs::read_to_string(&files[1]).unwrap();
    assert!(csv.starts_with("id,prediction\ns000,"), "{csv}");
    for line in csv.lines().skip(1) {
        let label = line.split(',').nth(1).unwrap();
        assert!(["alpha", "beta", "gamma"].contains(&label), "{line}");
    }

    // drop the label column: predictions only
    let unlabeled: String = fs::read_to_string(&data)
        .unwrap()
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(1);
            f.join(",") + "\n"
        })
        .collect();
    let data2 = write(dir.path(), "u.csv", &unlabeled);
    let run = run_predict_pretrained(&pc, &data2, &bundles).unwrap();
    assert!(run.result.testing_set.is_none());
    assert_eq!(run.result.to_json(), json!({}));
    assert_eq!(run.predictions, trained.bundle.training_predictions);
}

#[test]
fn predict_log_appends() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(45, 10));
    let (dc, ac) = family_setup(Family::Knn, Task::Classification, None, 0);
    train_to_dir(&dc, &ac, &data, dir.path()).unwrap();
    let mut pc = predict_config(&ac.description);
    pc.run_id = 7;
    predict_to_dir(&pc, &data, dir.path(), dir.path()).unwrap();
    let log = fs::read_to_string(dir.path().join("run_7.log")).unwrap();
    assert!(log.contains("training run 7") && log.contains("predict run 7"), "{log}");
}

#[test]
fn unresolved_description_lists_available_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(45, 11));
    let (dc, ac) = family_setup(Family::Knn, Task::Classification, None, 0);
    train_to_dir(&dc, &ac, &data, dir.path()).unwrap();
    let err = run_predict_pretrained(&predict_config("Missing"), &data, dir.path())
        .unwrap_err()
        .to_string();
    assert!(err.contains("\"Missing\"") && err.contains("KNN-classification"), "{err}");
}

#[test]
fn newest_run_wins_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(45, 12));
    let (mut dc, ac) = family_setup(Family::Knn, Task::Classification, None, 0);
    for run in [30, 4, 12] {
        dc.run_id = run;
        train_to_dir(&dc, &ac, &data, dir.path()).unwrap();
    }
    let p = resolve_bundle(dir.path(), &ac.description).unwrap();
    assert!(p.ends_with("run_30_model.json"), "{}", p.display());
}

#[test]
fn bundle_version_and_corruption_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(45, 13));
    let (dc, ac) = family_setup(Family::ElasticNet, Task::Regression, None, 0);
    let run = run_training(&dc, &ac, &data).unwrap();
    let path = save_bundle(&run.bundle, dir.path()).unwrap();
    let text = fs::read_to_string(&path).unwrap();

    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["schema_version"] = json!(99);
    fs::write(&path, v.to_string()).unwrap();
    let err = load_bundle(&path).unwrap_err().to_string();
    assert!(err.contains("schema_version 99"), "{err}");

    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["model"]["learned"]["intercepts"][0] = json!("oops");
    fs::write(&path, v.to_string()).unwrap();
    let err = load_bundle(&path).unwrap_err().to_string();
    assert!(err.contains("model.learned"), "{err}");
}

#[test]
fn save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &synthetic_csv(45, 14));
    let (dc, ac) = family_setup(Family::RandomForest, Task::Regression, Some(80), 0);
    let run = run_training(&dc, &ac, &data).unwrap();
    let first = bundle_to_string(&run.bundle).unwrap();
    let path = save_bundle(&run.bundle, dir.path()).unwrap();
    let back = load_bundle(&path).unwrap();
    assert_eq!(back, run.bundle);
    assert_eq!(bundle_to_string(&back).unwrap(), first);
}
