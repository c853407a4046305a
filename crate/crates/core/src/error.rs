use thiserror::Error;

/// Errors raised by path construction, field evaluation and guidance.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GvfError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("unknown catalog entry `{0}`")]
    Catalog(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("validation error: {0}")]
    Validation(String),
    /// The field (or the normalizing sub-vector) vanishes at the evaluation point.
    #[error("singular point: {0}")]
    Singularity(String),
    /// The planar field component vanishes or the heading error sits at +-pi.
    #[error("excluded set: {0}")]
    ExcludedSet(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, GvfError>;
