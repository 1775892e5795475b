use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A variable index or vector length does not match the model.
    #[error("structural error: {0}")]
    Structural(String),

    /// A model or scenario document could not be read.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A well-formed document or value violates a model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Enumeration or search exceeded a configured capacity.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Bad user input (dimension mismatch, empty box, unknown name, ...).
    #[error("input error: {0}")]
    Input(String),

    /// The fitter could not produce a model.
    #[error("fit error: {0}")]
    Fit(String),

    /// Configuration rejected (farm geometry, GA parameters, bench spec).
    #[error("config error: {0}")]
    Config(String),

    /// Dataset CSV problem with row/column context.
    #[error("dataset error at row {row}, column {column}: {message}")]
    Dataset {
        row: usize,
        column: usize,
        message: String,
    },

    /// Benchmark produced a GA value better than the certified optimum.
    #[error("certificate violation: {0}")]
    Certificate(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
