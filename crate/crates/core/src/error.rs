use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("extended-real clash: +inf and -inf combined")]
    InfinityClash,

    #[error("set is not relatively compact in the open grid set")]
    NotRelativelyCompact,

    #[error("atom at {0:?} lies outside the open grid set")]
    AtomOutsideGrid(Vec<f64>),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("premise failed: {0}")]
    PremiseFailed(String),

    #[error("walk-on-spheres: {restarts} of {samples} walks restarted (limit 1%)")]
    WosRestartOverflow { restarts: usize, samples: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for faults of the numerics themselves rather than of the inputs.
    pub fn is_numeric_fault(&self) -> bool {
        matches!(self, Error::InfinityClash | Error::WosRestartOverflow { .. })
    }
}
