use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the ranking engine.
///
/// Each variant maps onto one of the process exit codes used by the CLI,
/// see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input or configuration.
    #[error("{0}")]
    Invalid(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("record {0}: missing quality")]
    MissingQuality(String),
    /// Malformed file contents.
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    /// A numerical requirement was not met (e.g. a non-PSD kernel under strict checking).
    #[error("{0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn format(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for validation errors, 2 for numerical failures, 3 for I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}
