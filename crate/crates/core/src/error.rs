use thiserror::Error;

/// Errors produced by scene construction, compositing, the information
/// oracles and the selection loops.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate camera frame: {0}")]
    DegenerateFrame(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not positive definite (rank deficient Gram)")]
    RankDeficient,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("candidate pool exhausted")]
    PoolExhausted,

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
