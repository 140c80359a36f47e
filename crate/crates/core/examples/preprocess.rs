//! Fits imputation, one-hot encoding and standardization on training rows
//! and applies the fitted state to the held-out rows.
//!
//! cargo run --example preprocess

use riskpipe::config::{parse_algo_config, parse_data_config};
use riskpipe::preprocess::{apply_preprocess, fit_preprocess, FeaturePlan};
use riskpipe::tabular::{read_csv_dataset, split_dataset};

fn main() -> riskpipe::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let read = |n: &str| std::fs::read_to_string(format!("{dir}/{n}")).unwrap();
    let dc = parse_data_config(&read("data_config.json"))?;
    let ac = parse_algo_config(&read("algo_config.json"))?;

    let mut ds = split_dataset(read_csv_dataset(format!("{dir}/example.csv"), &dc)?, &dc)?;
    let train_rows = ds.train_rows.clone();
    let unseen = ds.restrict_categories(&train_rows);
    println!("test cells with levels unseen in training: {unseen}");

    let state = fit_preprocess(&ds, &ac, dc.seed)?;
    println!("dropped for missingness: {:?}", state.dropped_columns);
    for plan in &state.features {
        match plan {
            FeaturePlan::Numeric { name, mean, transform, .. } => {
                println!("  numeric     {name:<4} mean {mean:>8.4} transform {transform:?}")
            }
            FeaturePlan::Categorical { name, categories, mode, .. } => {
                println!("  categorical {name:<4} levels {categories:?} mode {}", categories[*mode])
            }
        }
    }

    let train = apply_preprocess(&state, &ds, &ds.train_rows)?;
    let test = apply_preprocess(&state, &ds, &ds.test_rows)?;
    println!("\nencoded columns: {:?}", train.feature_names);
    println!("train {}x{}, test {}x{}", train.x.rows(), train.x.cols(), test.x.rows(), test.x.cols());
    for j in 0..train.x.cols() {
        let col = train.x.col_values(j);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        println!("  {:<8} train mean {mean:>7.4}", train.feature_names[j]);
    }
    println!("first test row: {:?}", test.x.row(0));
    Ok(())
}
