use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error(transparent)]
    Core(#[from] mimax_core::Error),

    #[error("{}: {source}", path.display())]
    Model {
        path: PathBuf,
        #[source]
        source: ModelFileError,
    },

    #[error("every restart failed: {}", .0.join("; "))]
    AllRestartsFailed(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Problems with the binary model container.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelFileError {
    #[error("not a mimax model file (magic {found:?})")]
    BadMagic { found: String },

    #[error("unsupported model file version {found:?}")]
    UnsupportedVersion { found: String },

    #[error("truncated: needed {needed} bytes, found {available}")]
    Truncated { needed: usize, available: usize },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("array manifest does not match the header: {0}")]
    Manifest(String),

    #[error("malformed vocabulary section: {0}")]
    Vocab(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
