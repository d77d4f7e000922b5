use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed its domain validation.
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },

    /// A numeric guard tripped (truncated pulse, circular wrap, missing crossing).
    #[error("{0}")]
    Numeric(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; `line` is 1-based when known.
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse { path: PathBuf, line: Option<usize>, message: String },

    /// An error raised while handling a scenario config, with its location.
    #[error("{}{}: {source}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Config {
        path: PathBuf,
        line: Option<usize>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit status for this error: 2 validation, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid { .. } | Error::Parse { .. } => 2,
            Error::Numeric(_) => 3,
            Error::Io { .. } => 4,
            Error::Config { source, .. } => source.exit_code(),
        }
    }

    /// Short machine-readable error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Invalid { .. } => "validation",
            Error::Parse { .. } => "parse",
            Error::Numeric(_) => "numeric",
            Error::Io { .. } => "io",
            Error::Config { source, .. } => source.code(),
        }
    }
}
