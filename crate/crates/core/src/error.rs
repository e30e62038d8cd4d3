use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is not unimodular (determinant {det})")]
    NotUnimodular { det: String },

    #[error("degenerate form: symmetrization has determinant 0")]
    Degenerate,

    #[error("indefinite form: the isometry group is infinite")]
    Indefinite,

    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not an isometry: {0}")]
    NotAnIsometry(String),

    #[error("search space too large: {0}")]
    TooLarge(String),

    #[error("time budget of {seconds}s exhausted")]
    Timeout { seconds: f64 },

    #[error("malformed matrix input: {0}")]
    MalformedMatrix(String),

    #[error("fixture {path}: {message}")]
    Fixture { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_timeout(&self) -> bool {
        matches!(self, Error::Timeout { .. })
    }
}
