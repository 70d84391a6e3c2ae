use thiserror::Error;

/// Errors produced by the quantization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SbvrError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported size {0}: only powers of two are supported")]
    UnsupportedSize(usize),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = SbvrError> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(SbvrError::Validation(format!(
            "{what} contains a non-finite value at index {i}"
        ))),
        None => Ok(()),
    }
}
