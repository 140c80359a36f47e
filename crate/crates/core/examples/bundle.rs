//! Trains a k-nearest-neighbour classifier, serializes the bundle, reloads it
//! and checks that predictions and bytes survive the round trip.
//!
//! cargo run --example bundle

use std::fs;

use riskpipe::config::{parse_algo_config, parse_data_config};
use riskpipe::engine::{bundle_to_string, describe_bundle, load_bundle, run_training, save_bundle};
use serde_json::json;

fn main() -> riskpipe::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let dc = parse_data_config(&fs::read_to_string(format!("{dir}/data_config.json")).unwrap())?;
    let ac = parse_algo_config(
        &json!({"algorithm": {
            "description": "knn-type",
            "type": "classification",
            "parameters": {
                "preprocessing": {"standardization_feature": true},
                "KNN": {"k": 5}
            }
        }})
        .to_string(),
    )?;
    let run = run_training(&dc, &ac, format!("{dir}/example.csv"))?;
    print!("{}", describe_bundle(&run.bundle));

    let work = tempfile::tempdir().expect("scratch directory");
    let path = save_bundle(&run.bundle, work.path())?;
    let loaded = load_bundle(&path)?;
    let text = bundle_to_string(&run.bundle)?;
    println!("\n{} bytes written to {}", text.len(), path.file_name().unwrap().to_string_lossy());
    println!("reloaded bundle equal: {}", loaded == run.bundle);
    println!("re-serialized bytes identical: {}", bundle_to_string(&loaded)? == text);
    Ok(())
}
