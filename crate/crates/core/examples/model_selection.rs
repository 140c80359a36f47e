//! k-fold grid search over two gradient-boosting parameters, then recursive
//! feature elimination with an elastic net.
//!
//! cargo run --example model_selection

use rand::Rng;
use riskpipe::learners::{Family, ModelSpec, Task};
use riskpipe::matrix::Matrix;
use riskpipe::model_select::{kfold_split, rfe, select_and_fit, SelectionOptions};
use riskpipe::rng::rng_from;
use serde_json::json;

fn main() -> riskpipe::Result<()> {
    let mut r = rng_from(8);
    let n = 80;
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
    let x = Matrix::from_rows(&rows)?;
    // only the first two columns carry signal
    let y: Vec<f64> = rows.iter().map(|v| 3.0 * v[0] - 2.0 * v[1] + 0.1 * r.gen_range(-1.0..1.0)).collect();
    let names: Vec<String> = (1..=5).map(|i| format!("x{i}")).collect();

    let folds = kfold_split(n, 4, 1)?;
    println!("fold sizes: {:?}", folds.iter().map(Vec::len).collect::<Vec<_>>());

    let template = ModelSpec::new(Family::GradientBoosting, Task::Regression).with_seed(2);
    let axes = vec![
        ("n_estimators".to_string(), vec![json!(10), json!(40)]),
        ("max_depth".to_string(), vec![json!(1), json!(3)]),
    ];
    let opts = SelectionOptions { folds: 4, seed: 1, ..Default::default() };
    let selected = select_and_fit(&template, &axes, &x, Some(&y), &names, &opts)?;
    let cv = selected.cv.expect("grid search report");
    println!("\nscoring {:?} over {} folds", cv.scoring, cv.folds);
    for (i, p) in cv.points.iter().enumerate() {
        let mark = if i == cv.best_index { "*" } else { " " };
        println!(" {mark} {:?} mean {:.4} std {:.4}", p.params, p.mean, p.std);
    }

    let enet = ModelSpec::new(Family::ElasticNet, Task::Regression).with_param("alpha", json!(0.01));
    let (result, model) = rfe(&enet, &x, &y, &names, 2)?;
    println!("\nRFE keeps {:?}", result.retained);
    println!("eliminated in order {:?}", result.elimination_order);
    println!("ranking {:?}", result.ranking);
    println!("final weights {:?}", model.feature_weights().unwrap());
    Ok(())
}
