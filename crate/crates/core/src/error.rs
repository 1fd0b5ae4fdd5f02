use std::fmt;

use thiserror::Error;

use crate::sparse::Layout;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix market line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("wrong layout for {operand}: expected {expected}, got {actual}")]
    WrongLayout {
        operand: &'static str,
        expected: Layout,
        actual: Layout,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}

/// What went wrong while reading a Matrix Market stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MalformedHeader(String),
    Unsupported(String),
    MalformedSizeLine(String),
    MalformedEntry(String),
    OutOfRange { row: usize, col: usize },
    Truncated { expected: usize, found: usize },
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::MalformedHeader(h) => write!(f, "malformed header `{h}`"),
            ParseErrorKind::Unsupported(what) => write!(f, "unsupported matrix market variant: {what}"),
            ParseErrorKind::MalformedSizeLine(l) => write!(f, "malformed size line `{l}`"),
            ParseErrorKind::MalformedEntry(l) => write!(f, "malformed entry `{l}`"),
            ParseErrorKind::OutOfRange { row, col } => {
                write!(f, "coordinate ({row}, {col}) out of range")
            }
            ParseErrorKind::Truncated { expected, found } => {
                write!(f, "truncated entry list: expected {expected} entries, found {found}")
            }
        }
    }
}
