use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, RogError>;

#[derive(Debug, Error)]
pub enum RogError {
    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RogError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RogError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 configuration, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            RogError::Spec(_) | RogError::Config(_) => 2,
            RogError::Parse { .. }
            | RogError::Validation(_)
            | RogError::Dimension(_)
            | RogError::EmptyClass(_)
            | RogError::Io { .. }
            | RogError::Json(_) => 3,
            RogError::SingularCovariance(_) | RogError::Degenerate(_) => 4,
        }
    }
}
