use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed cell or record in a delimited file. `row` is 1-based and
    /// counts the header as row 1; `column` is 1-based when known.
    #[error("{path}: row {row}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        row: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("duplicate song id `{0}`")]
    DuplicateSongId(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("song `{song}` has no frames inside the window [{start}, {end}] s")]
    EmptyWindow { song: String, start: f64, end: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
