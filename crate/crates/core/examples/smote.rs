//! Balances an imbalanced two-class sample with SMOTE.
//!
//! cargo run --example smote

use rand::Rng;
use riskpipe::matrix::Matrix;
use riskpipe::resample::{smote_balance, SmoteConfig};
use riskpipe::rng::rng_from;

fn main() -> riskpipe::Result<()> {
    let mut r = rng_from(11);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..40 {
        let minority = i % 8 == 0;
        let c = if minority { 2.0 } else { 0.0 };
        rows.push(vec![c + r.gen_range(-1.0..1.0), c + r.gen_range(-1.0..1.0)]);
        y.push(if minority { 1.0 } else { 0.0 });
    }
    let x = Matrix::from_rows(&rows)?;
    let count = |y: &[f64], c: f64| y.iter().filter(|&&v| v == c).count();
    println!("before: {} negative, {} positive", count(&y, 0.0), count(&y, 1.0));

    let (xb, yb) = smote_balance(&x, &y, &SmoteConfig { k_neighbors: 3, seed: 5 })?;
    println!("after:  {} negative, {} positive", count(&yb, 0.0), count(&yb, 1.0));
    println!("first synthetic rows (appended after the originals):");
    for i in x.rows()..(x.rows() + 4) {
        println!("  {:?} -> {}", xb.row(i), yb[i]);
    }
    Ok(())
}
