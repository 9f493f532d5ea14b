use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] tokvec_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// Malformed vector input.
    #[error("{0}")]
    Input(String),

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),

    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),

    /// Invalid command-line configuration; several problems are joined.
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Report(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 1 for usage errors, 2 for data and IO errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Core(
                tokvec_core::Error::InvalidEncoding(_)
                | tokvec_core::Error::InvalidFilter(_)
                | tokvec_core::Error::InvalidParams(_),
            ) => 1,
            _ => 2,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Report(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Report(e.to_string())
    }
}
