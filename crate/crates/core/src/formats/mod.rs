//! Conventional sparse formats and their sequential kernels.

mod crs;
mod icrs;
mod triplet;

pub use crs::{spmv_crs_seq, CrsMatrix};
pub use icrs::{spmv_bicrs_seq, BicrsMatrix, ElementOrder, IcrsMatrix, Increment, IncrementalMatrix};
pub use triplet::{spmv_triplet, TripletMatrix};

use crate::{Error, Result};

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}
