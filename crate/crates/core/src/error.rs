use thiserror::Error;

/// Errors raised by the core model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("invalid {field}: {reason}")]
    InvalidValue { field: String, reason: String },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown lineage `{0}`")]
    UnknownLineage(String),
    #[error("action `{0}` has no default moral embedding")]
    MissingDefaultEmbedding(String),
    #[error("value iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("trajectory is not time-ordered at sample {index}")]
    Unordered { index: usize },
    #[error("policies cover different state sets")]
    StateSetMismatch,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidValue {
        field: field.into(),
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
