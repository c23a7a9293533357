use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0} required")]
    Missing(&'static str),
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: symbiont_core::Error,
    },
    #[error("sweep grid of {size} points exceeds the cap of {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Attaches a field path to a core error.
pub(crate) fn at<T>(context: impl Into<String>, r: symbiont_core::Result<T>) -> Result<T> {
    r.map_err(|source| HarnessError::Model {
        context: context.into(),
        source,
    })
}
