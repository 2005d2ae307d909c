use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("format error in {path} at byte {offset}: {msg}")]
    Format { path: String, offset: u64, msg: String },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("metrics error: {0}")]
    Metrics(String),

    #[error("stream error: {0}")]
    Stream(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Process exit code for the CLI. The FFI layer reuses the same numbering.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Format { .. } | Error::Metrics(_) | Error::Stream(_) => 3,
            Error::NonFinite(_) | Error::Training(_) => 4,
            Error::Checkpoint(_) => 5,
            Error::Io { .. } => 6,
            Error::Fold { source, .. } => source.exit_code(),
        }
    }
}
