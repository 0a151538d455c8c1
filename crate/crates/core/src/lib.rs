//! Sparse matrix storage formats and shared-memory parallel sparse
//! matrix-vector multiplication (SpMV).
//!
//! The crate is organised bottom-up:
//!
//! - [`formats`]: triplet, CRS, ICRS and BICRS storage with sequential kernels.
//! - [`sfc`]: Z-Morton and Hilbert curve arithmetic.
//! - [`blocked`]: the blocked formats (CSB, BCOH family, merge-blocked) and
//!   their sort-then-populate construction.
//! - [`parallel`]: the parallel multiplication engines.
//! - [`io`]: Matrix Market parsing, a binary triplet cache and a synthetic
//!   matrix generator.
//! - [`engine`]: a uniform front end over all eleven engines.

pub mod blocked;
pub mod engine;
pub mod error;
pub mod formats;
pub mod io;
pub mod parallel;
pub mod sfc;

mod sort;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

/// Width of global row/column indices and nonzero offsets.
#[cfg(not(feature = "index64"))]
pub type Idx = u32;

/// Width of global row/column indices and nonzero offsets.
#[cfg(feature = "index64")]
pub type Idx = u64;

/// Converts a `usize` into an [`Idx`], failing when it does not fit.
pub(crate) fn to_idx(value: usize, what: &'static str) -> Result<Idx> {
    Idx::try_from(value).map_err(|_| Error::IndexOverflow(format!("{what} = {value} exceeds the index width")))
}
