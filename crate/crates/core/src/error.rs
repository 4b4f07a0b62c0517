use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("unsupported format in {path}: {msg}")]
    Unsupported { path: PathBuf, msg: String },

    #[error("signal too short: {0}")]
    TooShort(String),

    /// A processing stage could not produce a usable result from this input.
    #[error("{stage} failed: {msg}")]
    Stage { stage: &'static str, msg: String },

    /// A broken internal invariant; always a bug.
    #[error("internal error in {module}: {msg}")]
    Internal { module: &'static str, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data or arguments rather than by
    /// a broken internal invariant.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Internal { .. })
    }
}
