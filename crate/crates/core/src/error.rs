use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("index {index} out of range for {what} of size {size}")]
    Index { what: String, index: usize, size: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("invalid config value for `{key}`: {detail}")]
    Config { key: String, detail: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("missing checkpoint at {0}")]
    MissingCheckpoint(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(key: &str, detail: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
