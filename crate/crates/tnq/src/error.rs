use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of the operands do not line up (leg dimensions, register length).
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A reshape plan is inconsistent with the tensor it targets.
    #[error("invalid reshape plan: {0}")]
    InvalidPlan(String),

    /// A declared precondition does not hold for the given input.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An underlying numerical routine failed to converge or produced NaNs.
    #[error("numeric failure in {0}")]
    Numeric(String),

    /// The requested computation exceeds a hard resource guard.
    #[error("resource guard: {0}")]
    ResourceGuard(String),

    /// Malformed or schema-invalid configuration input.
    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
