//! Fits every learner family on a small synthetic problem and scores it on
//! its training data.
//!
//! cargo run --example learners

use riskpipe::learners::{fit, Family, ModelSpec, Task};
use riskpipe::matrix::Matrix;
use riskpipe::metrics::{adjusted_rand_index, classification_metrics, regression_metrics};
use riskpipe::rng::rng_from;
use rand::Rng;
use serde_json::json;

/// Three Gaussian-ish blobs in 3-D with a class label and a linear target.
fn blobs(n: usize) -> (Matrix, Vec<f64>, Vec<f64>) {
    let mut r = rng_from(3);
    let mut rows = Vec::new();
    let (mut class, mut target) = (Vec::new(), Vec::new());
    for i in 0..n {
        let c = i % 3;
        let row: Vec<f64> = (0..3).map(|j| if j == c { 3.0 } else { 0.0 } + r.gen_range(-1.0..1.0)).collect();
        target.push(1.5 * row[0] - row[1] + 0.5 * row[2]);
        class.push(c as f64);
        rows.push(row);
    }
    (Matrix::from_rows(&rows).unwrap(), class, target)
}

fn params(family: Family) -> serde_json::Value {
    match family {
        Family::KMeans | Family::AggClustering => json!({"n_clusters": 3}),
        Family::Dbscan => json!({"eps": 1.5, "min_samples": 5}),
        Family::GradientBoosting => json!({"n_estimators": 30}),
        Family::RandomForest => json!({"n_estimators": 30}),
        _ => json!({}),
    }
}

fn main() -> riskpipe::Result<()> {
    let (x, class, target) = blobs(90);
    let ids: Vec<i64> = class.iter().map(|&c| c as i64).collect();
    for family in Family::ALL {
        for &task in family.tasks() {
            let mut spec = ModelSpec::new(family, task).with_seed(1);
            for (k, v) in params(family).as_object().unwrap() {
                spec = spec.with_param(k, v.clone());
            }
            let y = match task {
                Task::Classification => Some(class.as_slice()),
                Task::Regression => Some(target.as_slice()),
                Task::Clustering => None,
            };
            let model = fit(&spec, &x, y)?;
            let pred = model.predict(&x)?;
            let score = match task {
                Task::Classification => format!("accuracy {:.3}", classification_metrics(&class, &pred, None)?.get("accuracy").unwrap()),
                Task::Regression => format!("r2 {:.3}", regression_metrics(&target, &pred)?.get("r2").unwrap()),
                Task::Clustering => {
                    let labels: Vec<i64> = pred.iter().map(|&v| v as i64).collect();
                    format!("ARI {:.3}", adjusted_rand_index(&ids, &labels)?)
                }
            };
            println!("{:<16} {:<14} {score}", family.name(), task.name());
        }
    }
    Ok(())
}
