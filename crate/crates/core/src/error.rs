use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("entry {index} at ({row}, {col}) lies outside a {m}x{n} matrix")]
    IndexOutOfBounds {
        index: usize,
        row: usize,
        col: usize,
        m: usize,
        n: usize,
    },

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("inconsistent array lengths: {0}")]
    LengthMismatch(String),

    #[error("corrupt format: {0}")]
    CorruptFormat(String),

    #[error("index overflow: {0}")]
    IndexOverflow(String),

    #[error("coordinates ({row}, {col}) lie outside the {side}x{side} curve grid")]
    OutOfGrid { row: u64, col: u64, side: u64 },

    #[error("input is not sorted in curve order at position {0}")]
    UnsortedCurveOrder(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix was built for {expected} threads but the pool has {found}")]
    ThreadCountMismatch { expected: usize, found: usize },
}
