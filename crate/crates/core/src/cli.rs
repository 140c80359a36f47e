//! Command-line front end: `train`, `predict`, `inspect`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_algo_config, parse_data_config, parse_predict_config};
use crate::engine::{describe_bundle, load_bundle, predict_to_dir, train_to_dir};
use crate::error::{Error, Result};
use crate::logging;

#[derive(Debug, Parser)]
#[command(name = "riskpipe", version, about = "Train, apply and inspect tabular models from JSON configuration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write the result file, bundle and log.
    Train {
        #[arg(long, value_name = "FILE")]
        data_config: PathBuf,
        #[arg(long, value_name = "FILE")]
        algo_config: PathBuf,
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Overrides the seed in the data configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Apply a stored bundle, selected by description, to new data.
    Predict {
        #[arg(long, value_name = "FILE")]
        predict_config: PathBuf,
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        #[arg(long, value_name = "DIR")]
        bundles: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Print a summary of a model bundle.
    Inspect {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Train {
            data_config,
            algo_config,
            data,
            out: dir,
            seed,
        } => {
            let mut dc = parse_data_config(&read(&data_config)?)?;
            if let Some(s) = seed {
                dc.seed = s;
            }
            let ac = parse_algo_config(&read(&algo_config)?)?;
            let (_, files) = train_to_dir(&dc, &ac, &data, &dir)?;
            for f in files {
                let _ = writeln!(out, "{}", f.display());
            }
        }
        Command::Predict {
            predict_config,
            data,
            bundles,
            out: dir,
        } => {
            let pc = parse_predict_config(&read(&predict_config)?)?;
            let (_, files) = predict_to_dir(&pc, &data, &bundles, &dir)?;
            for f in files {
                let _ = writeln!(out, "{}", f.display());
            }
        }
        Command::Inspect { model } => {
            let b = load_bundle(&model)?;
            let _ = write!(out, "{}", describe_bundle(&b));
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command, writing
/// normal output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    logging::init();
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
