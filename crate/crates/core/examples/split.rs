//! Loads the example table and splits it into training and test rows, both
//! stratified on the group column and sequentially.
//!
//! cargo run --example split

use std::collections::BTreeMap;

use riskpipe::config::{parse_data_config, SplitType};
use riskpipe::tabular::{read_csv_dataset, split_dataset, TabularDataset};

fn class_counts(ds: &TabularDataset, rows: &[usize]) -> BTreeMap<String, usize> {
    let col = ds.column_index("Type").unwrap();
    let mut counts = BTreeMap::new();
    for &r in rows {
        *counts.entry(ds.cell_text(r, col)).or_insert(0) += 1;
    }
    counts
}

fn main() -> riskpipe::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let mut dc = parse_data_config(&std::fs::read_to_string(format!("{dir}/data_config.json")).unwrap())?;
    let ds = read_csv_dataset(format!("{dir}/example.csv"), &dc)?;
    println!("{} rows; columns:", ds.n_rows());
    for s in &ds.schemas {
        println!("  {:<8} {:?} {:?} {:?}", s.name, s.kind, s.role, s.categories);
    }

    let split = split_dataset(ds.clone(), &dc)?;
    println!("\nstratified {}%:", dc.split_percentage.unwrap());
    println!("  train {:?}", class_counts(&split, &split.train_rows));
    println!("  test  {:?}", class_counts(&split, &split.test_rows));

    dc.split_type = SplitType::Sequential;
    dc.group.clear();
    let seq = split_dataset(ds, &dc)?;
    println!("sequential: train rows {}..{}, test rows {}..{}", seq.train_rows[0], seq.train_rows.last().unwrap(),
        seq.test_rows[0], seq.test_rows.last().unwrap());
    Ok(())
}
