use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing derivative data: {0}")]
    MissingData(String),

    #[error("derivative order {requested} exceeds the limit {limit}")]
    OrderTooHigh { requested: usize, limit: usize },

    #[error("path {path} blew up at step {step} (t = {time})")]
    BlowUp { path: u64, step: usize, time: f64 },

    #[error("{failed} of {total} paths blew up (limit {limit_fraction})")]
    TooManyBlowUps {
        failed: usize,
        total: usize,
        limit_fraction: f64,
    },

    #[error("stiffness detected at t = {time}: step growth {growth:e}")]
    Stiff { time: f64, growth: f64 },

    #[error("eigen solver failed: {0}")]
    Eigen(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::BlowUp { .. }
                | Error::TooManyBlowUps { .. }
                | Error::Stiff { .. }
                | Error::Eigen(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
