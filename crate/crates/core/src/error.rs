use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the calibration-transfer library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("degenerate response: y'y = {0:e} after centering, weight system is undefined")]
    DegenerateResponse(f64),

    #[error("matrix is not positive definite: {0}")]
    Singular(String),

    #[error("rank exhausted at component {component}: t't = {score_norm_sq:e}")]
    RankExhausted {
        component: usize,
        score_norm_sq: f64,
    },

    #[error("P'W is numerically singular, regression coefficients cannot be aggregated")]
    Collinear,

    #[error("{path}: row {row}: expected {expected} columns, found {found}")]
    Ragged {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateResponse(_)
                | Error::Singular(_)
                | Error::RankExhausted { .. }
                | Error::Collinear
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
