use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty panel: {0}")]
    EmptyPanel(String),

    #[error("bandwidth q = {q} too large for a sample of {n} observations")]
    BandwidthTooLarge { q: usize, n: usize },

    #[error("operator is not symmetric (max asymmetry {asym:e}, scale {scale:e})")]
    NotSymmetric { asym: f64, scale: f64 },

    #[error("eigen-solver did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("degenerate variance: long-run quadratic form {0:e} is numerically zero")]
    DegenerateVariance(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error at row {row}, column {col}: {msg}")]
    Data { row: usize, col: usize, msg: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("critical-value cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
