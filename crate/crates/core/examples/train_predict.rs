//! Full pipeline: train from the bundled configurations into a scratch
//! directory, then apply the saved bundle to the same table by description.
//!
//! cargo run --example train_predict

use std::fs;

use riskpipe::config::{parse_algo_config, parse_data_config, parse_predict_config};
use riskpipe::engine::{predict_to_dir, train_to_dir};

fn main() -> riskpipe::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let read = |n: &str| fs::read_to_string(format!("{dir}/{n}")).unwrap();
    let dc = parse_data_config(&read("data_config.json"))?;
    let ac = parse_algo_config(&read("algo_config.json"))?;
    let pc = parse_predict_config(&read("predict_config.json"))?;
    let data = format!("{dir}/example.csv");

    let work = tempfile::tempdir().expect("scratch directory");
    let (run, files) = train_to_dir(&dc, &ac, &data, work.path())?;
    println!("training wrote:");
    for f in &files {
        println!("  {}", f.file_name().unwrap().to_string_lossy());
    }
    println!("{}", serde_json::to_string_pretty(&run.result.to_json()).unwrap());

    let (pred, files) = predict_to_dir(&pc, &data, work.path(), work.path())?;
    println!("\nprediction used {} and wrote:", pred.bundle_path.file_name().unwrap().to_string_lossy());
    for f in &files {
        println!("  {}", f.file_name().unwrap().to_string_lossy());
    }
    let csv = pred.predictions_csv()?;
    for line in csv.lines().take(6) {
        println!("  {line}");
    }
    println!("\nlog:");
    for line in pred.log.iter().chain(&run.log).take(8) {
        println!("  {line}");
    }
    Ok(())
}
