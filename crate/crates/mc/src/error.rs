use thiserror::Error;

#[derive(Debug, Error)]
pub enum McError {
    #[error("invalid experiment: {0}")]
    Spec(String),

    #[error(transparent)]
    Core(#[from] intorder_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T, E = McError> = std::result::Result<T, E>;
