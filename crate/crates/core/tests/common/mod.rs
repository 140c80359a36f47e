#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskpipe::config::{parse_algo_config, parse_data_config, AlgoConfig, DataConfig};
use riskpipe::learners::{Family, Task};
use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw (Box-Muller).
pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = r.gen_range(f64::EPSILON..1.0);
    let u2: f64 = r.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A data configuration in the documented layout. An empty `group` gives
/// unstratified random splits.
pub struct DataSpec<'a> {
    pub labels: &'a [&'a str],
    pub group: &'a str,
    pub drop: &'a [&'a str],
    pub categorical: &'a [&'a str],
    pub split: Option<u32>,
    pub seed: u64,
}

pub fn data_config_json(d: &DataSpec<'_>) -> Value {
    let DataSpec {
        labels,
        group,
        drop,
        categorical,
        split,
        seed,
    } = *d;
    let mut v = json!({
        "services": {"log_prefix": "run"},
        "runtime": {"run_id": 7},
        "dataset": {"name": "synthetic", "type": "point-in-time", "format": "csv"},
        "group": group,
        "PatientID": "id",
        "labels": labels,
        "time": "",
        "features2drop": drop,
        "phase": if split.is_some() { "training_predict" } else { "training" },
        "categorical_features": categorical,
        "split_type": "random",
        "seed": seed,
    });
    if let Some(p) = split {
        v["split_percentage"] = json!(p);
    }
    v
}

pub fn data_config(d: &DataSpec<'_>) -> DataConfig {
    parse_data_config(&data_config_json(d).to_string()).unwrap()
}

/// An algorithm configuration; `extra` entries are merged into `parameters`.
pub fn algo_config(family: Family, task: Task, params: Value, extra: Value) -> AlgoConfig {
    let mut parameters = json!({
        "preprocessing": {
            "standardization_feature": true,
            "standardization_label": task == Task::Regression,
            "scaling_feature": false,
            "scaling_label": false
        },
        "data_inputation": {"perc_nan_to_drop": 0.5, "categorical": "most_frequent", "not_categorical": "mean"},
    });
    parameters[family.name()] = params;
    if let Value::Object(m) = extra {
        for (k, v) in m {
            parameters[k] = v;
        }
    }
    let doc = json!({
        "algorithm": {
            "phase": "training",
            "config_name": family.name(),
            "description": format!("{}-{}", family.name(), task.name()),
            "type": task.name(),
            "parameters": parameters,
        }
    });
    parse_algo_config(&doc.to_string()).unwrap()
}

/// Small parameter sets that keep every family fast.
pub fn quick_params(family: Family) -> Value {
    match family {
        Family::SgdClassifier => json!({"epochs": 30}),
        Family::ElasticNet => json!({"alpha": 0.05, "l1_ratio": 0.5}),
        Family::GradientBoosting => json!({"n_estimators": 15, "max_depth": 2}),
        Family::RandomForest => json!({"n_estimators": 12, "max_depth": 5}),
        Family::Mlp => json!({"hidden": [6], "epochs": 40, "lr": 0.01}),
        Family::Svm => json!({"epochs": 30}),
        Family::Knn => json!({"k": 3}),
        Family::KMeans => json!({"n_clusters": 3}),
        Family::AggClustering => json!({"n_clusters": 3, "linkage": "average"}),
        Family::Dbscan => json!({"eps": 1.2, "min_samples": 4}),
    }
}

/// Table with an id, a three-class categorical label `cls`, a numeric target
/// `target`, four numeric features (some missing) and one categorical
/// feature `color`.
pub fn synthetic_csv(n: usize, seed: u64) -> String {
    let mut r = rng(seed);
    let levels = ["alpha", "beta", "gamma"];
    let colors = ["red", "green", "blue"];
    let mut out = String::from("id,cls,target,x1,x2,x3,x4,color\n");
    for i in 0..n {
        let c = i % 3;
        let x: Vec<f64> = (0..4)
            .map(|j| (if j == c { 3.0 } else { 0.0 }) + gauss(&mut r))
            .collect();
        let target = 2.0 * x[0] - x[1] + 0.5 * x[2] + 0.1 * gauss(&mut r);
        let mut cells: Vec<String> = x.iter().map(|v| format!("{v:.5}")).collect();
        if r.gen::<f64>() < 0.05 {
            let j = r.gen_range(0..4);
            cells[j] = String::new();
        }
        let color = if r.gen::<f64>() < 0.04 { "NA" } else { colors[r.gen_range(0..3)] };
        writeln!(out, "s{i:03},{},{target:.5},{},{color}", levels[c], cells.join(",")).unwrap();
    }
    out
}

/// Writes `text` as `name` under `dir` and returns the path.
pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Data and algorithm configuration for one (family, task) pair over
/// [`synthetic_csv`].
pub fn family_setup(family: Family, task: Task, split: Option<u32>, seed: u64) -> (DataConfig, AlgoConfig) {
    let dc = match task {
        Task::Regression => data_config(&DataSpec {
            labels: &["target"],
            group: "",
            drop: &["cls"],
            categorical: &["color"],
            split,
            seed,
        }),
        _ => data_config(&DataSpec {
            labels: &["cls"],
            group: "cls",
            drop: &["target"],
            categorical: &["color"],
            split,
            seed,
        }),
    };
    (dc, algo_config(family, task, quick_params(family), json!({})))
}

/// Key structure of a JSON value: objects keep their keys, leaves become null.
pub fn shape(v: &Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), shape(v))).collect()),
        _ => Value::Null,
    }
}
