//! Blocked storage formats and their construction.
//!
//! Every builder follows the same two steps: sort the triplet's nonzeros by
//! a format-specific key (parallel), then populate the format's arrays in one
//! pass over the sorted order.

mod bcoh;
mod csb;
mod mergeb;

pub use bcoh::{
    build_bcoh, partition_rows_by_nnz, Band, BandBlocks, BandElements, BcohLayout, BcohMatrix, BlockLevel, InBlockOrder,
    InBlockStorage,
};
pub use csb::{build_csb, CsbMatrix};
pub use mergeb::{build_mergeb, MergeBlockMatrix};

use crate::formats::TripletMatrix;
use crate::sfc::covering_level;
use crate::sort::sort_by_key;
use crate::{Error, Result};

/// Index-width cap (in bits) for CSB and the merge-blocked formats.
pub const CSB_INDEX_BITS: u32 = 16;
/// Index-width cap (in bits) for the BCOH family; in-block ICRS increments
/// may reach `2 * beta - 1`, which must fit 16 bits.
pub const BCOH_INDEX_BITS: u32 = 15;
/// Default L2 size used when the caller does not supply one.
pub const DEFAULT_L2_BYTES: usize = 512 * 1024;

/// Side length of the square sparse blocks; always a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockSize {
    log2: u32,
}

impl BlockSize {
    pub fn from_log2(log2: u32) -> Result<Self> {
        if !(1..=CSB_INDEX_BITS).contains(&log2) {
            return Err(Error::InvalidArgument(format!("block size 2^{log2} outside [2, 2^16]")));
        }
        Ok(BlockSize { log2 })
    }

    pub fn from_beta(beta: usize) -> Result<Self> {
        if !beta.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("block size {beta} is not a power of two")));
        }
        Self::from_log2(beta.trailing_zeros())
    }

    #[inline]
    pub fn beta(self) -> usize {
        1 << self.log2
    }

    #[inline]
    pub fn log2(self) -> u32 {
        self.log2
    }

    fn check_cap(self, cap_bits: u32) -> Result<()> {
        if self.log2 > cap_bits {
            return Err(Error::InvalidArgument(format!(
                "block size 2^{} exceeds this format's cap of 2^{cap_bits}",
                self.log2
            )));
        }
        Ok(())
    }
}

/// Picks `log2(beta)` at the top of `[ceil(log2 sqrt n), 3 + ceil(log2 sqrt n)]`
/// and lowers it until `beta <= 2^index_bits_cap` and the x and y windows
/// (`2 * beta * value_size` bytes) fit in half of `l2_bytes`. Never below 2.
pub fn select_block_size(n: usize, index_bits_cap: u32, l2_bytes: usize, value_size: usize) -> BlockSize {
    let lower = covering_level(n.max(1) as u64).div_ceil(2);
    let mut log2 = lower + 3;
    let fits = |log2: u32| {
        let beta = 1u128 << log2;
        log2 <= index_bits_cap && 2 * beta * value_size as u128 <= l2_bytes as u128 / 2
    };
    while log2 > 1 && !fits(log2) {
        log2 -= 1;
    }
    BlockSize { log2: log2.max(1) }
}

/// A 16+16-bit in-block coordinate: row in the high half, column in the low half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PackedIndex(pub u32);

impl PackedIndex {
    pub fn pack(row: u32, col: u32) -> Result<Self> {
        if row > u16::MAX as u32 || col > u16::MAX as u32 {
            return Err(Error::IndexOverflow(format!("({row}, {col}) does not fit 16+16 bits")));
        }
        Ok(PackedIndex((row << 16) | col))
    }

    #[inline(always)]
    pub(crate) fn pack_unchecked(row: usize, col: usize) -> Self {
        PackedIndex(((row as u32) << 16) | col as u32)
    }

    #[inline(always)]
    pub fn unpack(self) -> (u32, u32) {
        (self.0 >> 16, self.0 & 0xffff)
    }
}

pub fn pack_index(row: u32, col: u32) -> Result<PackedIndex> {
    PackedIndex::pack(row, col)
}

pub fn unpack_index(index: PackedIndex) -> (u32, u32) {
    index.unpack()
}

/// Block-grid geometry shared by the blocked formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Grid {
    pub beta: BlockSize,
    pub block_rows: usize,
    pub block_cols: usize,
}

impl Grid {
    pub fn new(m: usize, n: usize, beta: BlockSize) -> Self {
        Grid {
            beta,
            block_rows: m.div_ceil(beta.beta()),
            block_cols: n.div_ceil(beta.beta()),
        }
    }

    /// Checks that `cell << 2 log2(beta) | in-block rank` fits 64 bits.
    pub fn check_key_width(&self) -> Result<()> {
        let cells = (self.block_rows as u128) * (self.block_cols as u128);
        let bits = covering_level(cells.max(1) as u64) + 2 * self.beta.log2();
        if cells + 1 > (isize::MAX as u128) / 8 {
            return Err(Error::IndexOverflow(format!(
                "{}x{} block grid is too large to enumerate",
                self.block_rows, self.block_cols
            )));
        }
        if bits > 64 {
            return Err(Error::IndexOverflow(format!(
                "{}x{} block grid with beta = {} needs {bits}-bit sort keys",
                self.block_rows,
                self.block_cols,
                self.beta.beta()
            )));
        }
        Ok(())
    }
}

/// Sorts nonzeros by `(block row, block col, in-block rank)` where
/// `in_block_rank(local_row, local_col)` must be `< beta^2`.
pub(crate) fn sort_block_row_major<F>(a: &TripletMatrix, grid: &Grid, in_block_rank: F) -> Vec<(u64, usize)>
where
    F: Fn(u64, u64) -> u64 + Sync + Send,
{
    let b = grid.beta.log2();
    let mask = (1u64 << b) - 1;
    let block_cols = grid.block_cols as u64;
    let (rows, cols) = (a.row_ind(), a.col_ind());
    sort_by_key(a.nnz(), |i| {
        let (r, c) = (rows[i] as u64, cols[i] as u64);
        let cell = (r >> b) * block_cols + (c >> b);
        (cell << (2 * b)) | in_block_rank(r & mask, c & mask)
    })
}
