//! Drives the command-line front end in-process: train, inspect, predict.
//!
//! cargo run --example cli

use std::io;

fn main() {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let work = tempfile::tempdir().expect("scratch directory");
    let out = work.path().to_str().unwrap();
    let bundle = format!("{out}/log_781_model.json");
    let commands: [Vec<String>; 3] = [
        vec![
            "train".into(),
            "--data-config".into(), format!("{data}/data_config.json"),
            "--algo-config".into(), format!("{data}/algo_config.json"),
            "--data".into(), format!("{data}/example.csv"),
            "--out".into(), out.into(),
        ],
        vec!["inspect".into(), "--model".into(), bundle],
        vec![
            "predict".into(),
            "--predict-config".into(), format!("{data}/predict_config.json"),
            "--data".into(), format!("{data}/example.csv"),
            "--bundles".into(), out.into(),
            "--out".into(), out.into(),
        ],
    ];
    riskpipe::logging::set_stderr_level(log::LevelFilter::Warn);
    for args in commands {
        println!("$ riskpipe {}", args[0]);
        let argv = std::iter::once("riskpipe".to_string()).chain(args);
        let code = riskpipe::cli::run(argv, &mut io::stdout(), &mut io::stderr());
        println!("exit {code}\n");
    }
}
