//! Classification, regression and clustering metrics on hand-written vectors.
//!
//! cargo run --example metrics

use riskpipe::matrix::Matrix;
use riskpipe::metrics::{classification_metrics, clustering_external_metrics, regression_metrics, silhouette_score};

fn main() -> riskpipe::Result<()> {
    let y_true = [0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0];
    let y_pred = [0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
    let proba = Matrix::from_rows(&[
        [0.9, 0.1], [0.4, 0.6], [0.2, 0.8], [0.3, 0.7],
        [0.6, 0.4], [0.8, 0.2], [0.1, 0.9], [0.7, 0.3],
    ])?;
    let m = classification_metrics(&y_true, &y_pred, Some((&proba, &[0.0, 1.0])))?;
    println!("classification: {}", m.to_json());

    let m = regression_metrics(&[3.0, -0.5, 2.0, 7.0], &[2.5, 0.0, 2.0, 8.0])?;
    println!("regression:     {}", m.to_json());

    let truth = [0, 0, 0, 1, 1, 1];
    let found = [1, 1, 0, 0, 2, 2];
    println!("clustering:     {}", clustering_external_metrics(&truth, &found)?.to_json());
    let x = Matrix::from_rows(&[[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1]])?;
    println!("silhouette:     {:.4}", silhouette_score(&x, &truth)?);

    // zero denominators give 0 and are reported
    let m = classification_metrics(&[0.0, 0.0], &[0.0, 0.0], None)?;
    println!("degenerate:     {:?}", m.degenerate);
    Ok(())
}
