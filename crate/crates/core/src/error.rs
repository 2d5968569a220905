use std::path::PathBuf;

/// Errors surfaced by every module. The `E_*` prefix of each message is
/// stable and is what the CLI prints to stderr.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("E_IO: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("E_PARSE: {0}")]
    Parse(String),
    #[error("E_SHAPE: {0}")]
    Shape(String),
    #[error("E_GRAPH: {0}")]
    Graph(String),
    #[error("E_NUMERIC: {0}")]
    Numeric(String),
    #[error("E_CONFIG: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Parse(_) => 3,
            Error::Shape(_) => 4,
            Error::Config(_) => 5,
            Error::Graph(_) => 6,
            Error::Numeric(_) => 7,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
