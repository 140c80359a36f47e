//! Exact and kernel Shapley attributions for a random forest and a check of
//! local accuracy.
//!
//! cargo run --example shap

use rand::Rng;
use riskpipe::explain::{select_background, shapley_exact, shapley_kernel};
use riskpipe::learners::{fit, Family, ModelSpec, Task};
use riskpipe::matrix::Matrix;
use riskpipe::rng::rng_from;
use serde_json::json;

fn main() -> riskpipe::Result<()> {
    let mut r = rng_from(4);
    let rows: Vec<Vec<f64>> = (0..120).map(|_| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|v| 2.0 * v[0] + v[1] * v[2]).collect();
    let x = Matrix::from_rows(&rows)?;
    let spec = ModelSpec::new(Family::RandomForest, Task::Regression)
        .with_param("n_estimators", json!(25))
        .with_seed(1);
    let model = fit(&spec, &x, Some(&y))?;
    let background = select_background(&x, 9);

    let row = x.row(0);
    let exact = shapley_exact(&model, row, &background)?;
    let kernel = shapley_kernel(&model, row, &background, 16, 3)?;
    println!("row {row:?}");
    println!("base value {:.4}, prediction {:.4}", exact.base_value[0], exact.explained_output[0]);
    println!("exact  {:?}", exact.phi[0].iter().map(|v| format!("{v:+.4}")).collect::<Vec<_>>());
    println!("kernel {:?}", kernel.phi[0].iter().map(|v| format!("{v:+.4}")).collect::<Vec<_>>());
    let total = exact.base_value[0] + exact.phi[0].iter().sum::<f64>();
    println!("base + sum(phi) = {total:.6} (gap {:.1e})", (total - exact.explained_output[0]).abs());
    Ok(())
}
