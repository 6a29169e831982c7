use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("duplicate post id `{0}`")]
    DuplicatePost(String),

    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error("unknown training setup `{0}`")]
    UnknownSetup(String),

    #[error("no embeddable content")]
    NoEmbeddableContent,

    #[error("need both positive and negative judgments")]
    NeedBothClasses,

    #[error("corpus has no categories")]
    NoCategories,

    #[error("empty community")]
    EmptyCommunity,

    #[error("degenerate corpus: {0}")]
    Degenerate(String),

    #[error("row order mismatch between fused matrices")]
    RowMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid file format: {0}")]
    Format(String),
}
