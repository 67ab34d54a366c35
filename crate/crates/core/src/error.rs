use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("nonpositive gain {value} at slot {slot}")]
    NonPositiveGain { slot: usize, value: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("overhead exceeds frame: {0}")]
    OverheadExceedsFrame(String),

    #[error("undefined fairness: all rates are zero")]
    UndefinedFairness,

    #[error("instance too large for exhaustive search: {points} points exceeds limit {limit}")]
    InstanceTooLarge { points: u128, limit: u128 },

    #[error("quadrature did not converge: estimated error {achieved:e} above tolerance {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty sweep: no axis values given")]
    EmptySweep,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
