use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two tensors disagree on a named axis.
    #[error("shape mismatch on {axis} axis: {detail}")]
    ShapeMismatch { axis: &'static str, detail: String },

    #[error("non-finite value {value} at flat index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("resource limit: {what} needs {needed} bytes, cap is {cap} bytes{hint}")]
    Resource {
        what: String,
        needed: u128,
        cap: u64,
        hint: String,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("format error in {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit status for this error: 2 for bad input, 3 for resource
    /// limits, 1 for anything internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. } => 3,
            Error::Internal(_) => 1,
            _ => 2,
        }
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
