use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}, expected 1, 2 or 3")]
    UnsupportedDimension(usize),
    #[error("fields live on different mode bases")]
    BasisMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("collocation grid has {points} points per axis, at least {required} are required")]
    GridTooSmall { points: usize, required: usize },
    #[error("blow-up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },
    #[error("Picard iteration does not contract (iterate distances {distances:?})")]
    NonContraction { distances: Vec<f64> },
    #[error("horizon {requested} exceeds the local existence time {limit}")]
    HorizonTooLarge { requested: f64, limit: f64 },
    #[error("need at least {need} runs, got {got}")]
    TooFewRuns { got: usize, need: usize },
    #[error("restriction keeps no snapshot")]
    EmptyRestriction,
    #[error("residual check failed: {0}")]
    ResidualCheck(String),
    #[error("non-stationary input: {0}")]
    NonStationary(String),
    #[error("work budget exceeded: {needed} steps requested, {budget} allowed")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
