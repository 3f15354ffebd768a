//! Error type shared by the whole crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or bound parameter violates one of the model invariants.
    /// The message names the first violated invariant.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Two rasters that must share dimensions do not.
    #[error("dimension mismatch: {expected} vs {actual} ({context})")]
    DimensionMismatch {
        expected: String,
        actual: String,
        context: &'static str,
    },

    /// A mask region cannot be covered by shots within the size bounds.
    #[error("unfracturable region: {0}")]
    Unfracturable(String),

    /// The optimizer produced a non-finite loss.
    #[error("non-finite loss at epoch {epoch} (component: {component})")]
    NonFiniteLoss { epoch: usize, component: &'static str },

    /// A file could not be parsed (shot list, raster, or config).
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 = parse, 3 = validation, 4 = numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io { .. } => 2,
            Error::InvalidParam(_) | Error::DimensionMismatch { .. } | Error::Unfracturable(_) => {
                3
            }
            Error::NonFiniteLoss { .. } => 4,
        }
    }
}
