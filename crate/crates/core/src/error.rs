use thiserror::Error;

pub type Result<T> = std::result::Result<T, VfeError>;

#[derive(Debug, Error)]
pub enum VfeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{a} has no inverse modulo {c}")]
    NoInverse { a: i64, c: i64 },

    #[error("polygon failed to close: residual {residual:e} exceeds {tolerance:e}")]
    ClosureFailure { residual: f64, tolerance: f64 },

    #[error("degenerate alignment: {0}")]
    DegenerateAlignment(String),

    #[error("time integration blew up at step {step}: {reason}")]
    BlowUp { step: usize, reason: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient data: {found} samples in window, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl VfeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        VfeError::InvalidArgument(msg.into())
    }
}
