use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants are grouped by how the CLI reports them:
/// usage problems exit with 1, data/format problems with 2, and numeric
/// failures with 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid parameter or option combination supplied by the caller.
    #[error("invalid usage: {0}")]
    Usage(String),

    /// A file could not be read or written.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An input file parsed but violated the expected format.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    /// The data itself is unusable (missing labels, unknown ids, empty
    /// classes, ...), independent of any particular file.
    #[error("{0}")]
    Data(String),

    /// A computation could not produce a defined result (zero-norm cosine,
    /// non-convergence, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }

    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Format { .. } | Error::Data(_) => 2,
            Error::Numeric(_) => 3,
        }
    }
}
