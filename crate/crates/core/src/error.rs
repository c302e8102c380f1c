use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("quadratic form is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("point is off the surface: {0}")]
    OffSurface(String),

    #[error("point lies outside the cap: {0}")]
    OutsideCap(String),

    #[error("aliasing on the sampling grid: {0}")]
    Aliasing(String),

    #[error("frequency is not an integer vector: {0}")]
    NonInteger(String),

    #[error("frequency set {set} is not 1/M separated: min distance {distance} < {required}")]
    SeparationViolated { set: usize, distance: f64, required: f64 },

    #[error("operation requires a broad classification")]
    NotBroad,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("nonpositive value {0} cannot be log-fitted")]
    NonPositive(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
