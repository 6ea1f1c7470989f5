use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed raster header: {0}")]
    MalformedHeader(String),

    #[error("raster payload size mismatch: header declares {expected} bytes, found {actual}")]
    PayloadSize { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },

    #[error("negative amplitude {value} at row {row}, col {col}")]
    NegativeAmplitude { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("least-squares solver did not converge after {iterations} iterations (cost {cost:e})")]
    NonConvergence { iterations: usize, cost: f64 },

    #[error("unsupported estimation: {0}")]
    Unsupported(String),

    #[error("raster kind mismatch in {path}: expected {expected}, found {found}")]
    KindMismatch {
        path: PathBuf,
        expected: &'static str,
        found: &'static str,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
