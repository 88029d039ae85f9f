use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum InlsError {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("resampling error: {0}")]
    Resampling(String),
    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("search error: {0}")]
    Search(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, InlsError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(InlsError::Parameter(msg.into()))
}
