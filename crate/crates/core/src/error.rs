use thiserror::Error;

use crate::network::TrainTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An exhaustive routine was asked to run beyond its desk-scale guard.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular system: {0}")]
    Singular(String),

    /// A reference computation failed to reach its tolerance.
    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("malformed file: {0}")]
    Parse(String),

    #[error("training diverged at step {step} (loss {loss:e})")]
    Diverged {
        step: usize,
        loss: f64,
        trace: Box<TrainTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
