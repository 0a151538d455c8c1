//! Getting matrices in and out: Matrix Market text, a binary triplet cache,
//! and a seeded synthetic generator.

mod cache;
mod mtx;
mod synthetic;

pub use cache::{cache_read, cache_read_file, cache_write, cache_write_file, CACHE_MAGIC};
pub use mtx::{
    read_matrix_market, read_matrix_market_file, read_matrix_market_with_header, write_matrix_market, Field,
    MatrixHeader, Symmetry,
};
pub use synthetic::generate_synthetic;

/// Errors from reading or writing matrix files.
#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("unsupported Matrix Market format `{0}` (only coordinate is supported)")]
    UnsupportedFormat(String),
    #[error("unsupported Matrix Market field `{0}`")]
    UnsupportedField(String),
    #[error("unsupported Matrix Market symmetry `{0}`")]
    UnsupportedSymmetry(String),
    #[error("line {line}: malformed entry: {reason}")]
    MalformedEntry { line: usize, reason: String },
    #[error("line {line}: entry ({row}, {col}) outside a {m}x{n} matrix (1-based)")]
    IndexOutOfRange { line: usize, row: i64, col: i64, m: usize, n: usize },
    #[error("duplicate entry at ({row}, {col}) (0-based)")]
    DuplicateEntry { row: usize, col: usize },
    #[error("header declares {declared} entries but {found} were read")]
    EntryCountMismatch { declared: usize, found: usize },
    #[error("not a matrix cache file (bad magic)")]
    BadMagic,
    #[error("unsupported matrix cache version {0:?}")]
    BadVersion(char),
    #[error("matrix cache is truncated")]
    Truncated,
    #[error("matrix cache has trailing bytes after the value stream")]
    TrailingData,
    #[error(transparent)]
    Matrix(#[from] crate::Error),
}

impl ReadError {
    /// Maps a matrix validation error to the matching read error kind.
    pub(crate) fn from_matrix(err: crate::Error) -> Self {
        match err {
            crate::Error::DuplicateEntry { row, col } => ReadError::DuplicateEntry { row, col },
            other => ReadError::Matrix(other),
        }
    }
}

pub type ReadResult<T> = std::result::Result<T, ReadError>;
