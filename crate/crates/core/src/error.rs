use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed JSON at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("missing required field \"{0}\"")]
    MissingField(String),

    #[error("field \"{field}\": invalid value {value}; allowed: {}", allowed.join(", "))]
    InvalidEnum {
        field: String,
        value: String,
        allowed: Vec<String>,
    },

    #[error("field \"{field}\": {message}")]
    InvalidField { field: String, message: String },

    #[error("configuration invalid:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("data error: {0}")]
    Data(String),

    #[error("format {0} not supported in this build")]
    UnsupportedFormat(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("bundle {path}: {message}")]
    Bundle { path: PathBuf, message: String },

    #[error("stage {stage} failed (run {run_id}): {source}")]
    Stage {
        stage: &'static str,
        run_id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's configuration or inputs rather
    /// than by a failure during execution.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Json { .. }
            | Error::MissingField(_)
            | Error::InvalidEnum { .. }
            | Error::InvalidField { .. }
            | Error::Validation(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
