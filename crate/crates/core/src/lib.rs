//! Configuration-driven tabular modelling: load a table, split and
//! preprocess it, fit one of ten learner families with optional grid search,
//! RFE and SMOTE, score it, explain it with Shapley values and persist the
//! result as a JSON bundle that can be applied to new data.

pub mod config;
pub mod error;
pub mod learners;
pub mod matrix;
pub mod rng;
pub mod tabular;
pub mod preprocess;
pub mod metrics;
pub mod resample;
pub mod model_select;
pub mod explain;
pub mod logging;
pub mod engine;
pub mod cli;

pub use error::{Error, Result};
