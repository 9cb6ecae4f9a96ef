use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Csv(String),

    #[error("{0}")]
    Json(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("{0}")]
    Data(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("{0}")]
    Config(String),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("{method} needs input gradients but the model is predict-only")]
    NotDifferentiable { method: String },

    #[error("weighted least-squares system is singular: {0}")]
    Singular(String),

    #[error("exact Shapley enumeration supports at most {max} features, got {d}")]
    TooManyFeatures { d: usize, max: usize },

    #[error("{0}")]
    Metric(String),
}

impl Error {
    /// Stable, machine-parsable category used by the CLI error line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Schema(_) => "schema",
            Error::Data(_) => "data",
            Error::Dimension { .. } => "dimension",
            Error::Config(_) => "config",
            Error::Diverged { .. } => "diverged",
            Error::NotDifferentiable { .. } => "incompatible-model",
            Error::Singular(_) => "singular",
            Error::TooManyFeatures { .. } => "too-many-features",
            Error::Metric(_) => "metric",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::Dimension { expected, actual })
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
