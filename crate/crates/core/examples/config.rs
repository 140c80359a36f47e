//! Parses the bundled data, algorithm and prediction configurations, checks
//! them against each other and shows how a bad document is reported.
//!
//! cargo run --example config

use std::fs;

use riskpipe::config::{parse_algo_config, parse_data_config, parse_predict_config, validate_cross};

fn fixture(name: &str) -> String {
    let path = format!("{}/examples/data/{name}", env!("CARGO_MANIFEST_DIR"));
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn main() -> riskpipe::Result<()> {
    let dc = parse_data_config(&fixture("data_config.json"))?;
    let ac = parse_algo_config(&fixture("algo_config.json"))?;
    let pc = parse_predict_config(&fixture("predict_config.json"))?;

    println!("data: labels {:?}, drop {:?}, categorical {:?}", dc.labels, dc.features2drop, dc.categorical_features);
    println!("      phase {:?}, split {:?} ({:?}), seed {}", dc.phase, dc.split_percentage, dc.split_type, dc.seed);
    println!("algo: {} / {} with {:?}", ac.algorithm.name(), ac.task.name(), ac.fixed_params());
    println!("predict: bundle description {:?}", pc.description);

    let check = validate_cross(&dc, &ac)?;
    println!("cross-check: {check:?}");

    println!("\nnormalized data configuration:");
    println!("{}", serde_json::to_string_pretty(&dc.to_json()).unwrap());

    let bad = r#"{"algorithm": {"description": "x", "type": "regression",
                  "parameters": {"SGDClassifier": {}, "smote": {"enabled": true}}}}"#;
    match parse_algo_config(bad) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("\nrejected configuration: {e}"),
    }
    Ok(())
}
