use std::ops::Range;

use rayon::prelude::*;

use super::{BlockSize, Grid, PackedIndex, BCOH_INDEX_BITS};
use crate::formats::{check_len, TripletMatrix};
use crate::sfc::{covering_level, hilbert_for_each_in_rect, hilbert_rank, MAX_LEVEL};
use crate::sort::sort_subset_by_key;
use crate::{Error, Result};

/// How nonzeros are stored inside a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InBlockStorage {
    /// 16-bit ICRS increment streams.
    Icrs,
    /// One [`PackedIndex`] per nonzero.
    Packed,
}

/// Order of the nonzeros inside a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InBlockOrder {
    RowWise,
    Hilbert,
}

/// How the sequence of blocks of one band is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockLevel {
    /// Nonempty blocks only, addressed by signed 16-bit BICRS jumps.
    Bicrs,
    /// A 32-bit offset for every cell of the band's block grid, in Hilbert order.
    HilbertPtr,
}

/// The four supported combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BcohLayout {
    /// ICRS blocks, row-wise inside, BICRS block level.
    Bcoh,
    /// Packed blocks, row-wise inside, BICRS block level.
    Bcohc,
    /// Packed blocks, Hilbert inside, BICRS block level.
    Bcohch,
    /// Packed blocks, Hilbert inside, Hilbert-ordered block pointers.
    Bcohchp,
}

impl BcohLayout {
    pub const ALL: [BcohLayout; 4] = [BcohLayout::Bcoh, BcohLayout::Bcohc, BcohLayout::Bcohch, BcohLayout::Bcohchp];

    pub fn in_block(self) -> InBlockStorage {
        match self {
            BcohLayout::Bcoh => InBlockStorage::Icrs,
            _ => InBlockStorage::Packed,
        }
    }

    pub fn in_block_order(self) -> InBlockOrder {
        match self {
            BcohLayout::Bcoh | BcohLayout::Bcohc => InBlockOrder::RowWise,
            _ => InBlockOrder::Hilbert,
        }
    }

    pub fn block_level(self) -> BlockLevel {
        match self {
            BcohLayout::Bcohchp => BlockLevel::HilbertPtr,
            _ => BlockLevel::Bicrs,
        }
    }
}

/// Block-level structure of one band.
#[derive(Debug, Clone, PartialEq)]
pub enum BandBlocks {
    /// `row_jump[0]` is the first band-relative block row, later entries are
    /// row increments. `col_jump[0]` is the first block column; a later jump
    /// that carries the column to `>= block_cols` (mod 2^16) signals a row
    /// change. The final jump lands exactly on `block_cols`.
    Bicrs {
        block_nnz: Vec<u32>,
        row_jump: Vec<i16>,
        col_jump: Vec<i16>,
    },
    /// Offsets into the band's elements for each in-band cell, visited in
    /// Hilbert order of the global block grid.
    HilbertPtr { blk_ptr: Vec<u32> },
}

/// Nonzeros of one band, block after block.
#[derive(Debug, Clone, PartialEq)]
pub enum BandElements {
    /// Per block: `nnz + 1` column increments (the last one carries the
    /// column past `beta`) and one row entry per nonempty row.
    Icrs {
        col_inc: Vec<u16>,
        row_jump: Vec<u16>,
        data: Vec<f64>,
    },
    Packed { packed: Vec<PackedIndex>, data: Vec<f64> },
}

/// The rows owned by one worker.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    first_row: usize,
    row_count: usize,
    block_row0: u64,
    block_rows: usize,
    block_cols: usize,
    grid_level: u32,
    beta_log2: u32,
    blocks: BandBlocks,
    elements: BandElements,
}

/// Row bands of Hilbert-ordered sparse blocks, one band per worker.
#[derive(Debug, Clone, PartialEq)]
pub struct BcohMatrix {
    m: usize,
    n: usize,
    beta: BlockSize,
    layout: BcohLayout,
    bands: Vec<Band>,
}

/// Splits `[0, m)` into `p` bands of roughly `nnz / p` nonzeros each.
///
/// `row_nnz_prefix` has `m + 1` entries. Cut `t` is placed at the first
/// multiple of `beta` (clamped to `m`) whose prefix reaches `t * nnz / p`, so
/// no band exceeds `nnz / p` by more than one block row's nonzeros. Returns
/// `p + 1` nondecreasing boundaries from `0` to `m`.
pub fn partition_rows_by_nnz(row_nnz_prefix: &[usize], p: usize, beta: usize) -> Vec<usize> {
    assert!(p >= 1 && beta >= 1 && !row_nnz_prefix.is_empty());
    let m = row_nnz_prefix.len() - 1;
    let nnz = row_nnz_prefix[m] as u128;
    let block_rows = m.div_ceil(beta);
    let mut bounds = Vec::with_capacity(p + 1);
    bounds.push(0);
    let mut lo = 0;
    for t in 1..p {
        let target = t as u128 * nnz;
        // First block boundary at or after `lo` whose prefix reaches the target.
        let reaches = |k: usize| row_nnz_prefix[(k * beta).min(m)] as u128 * p as u128 >= target;
        let (mut k, mut hi) = (lo, block_rows);
        while k < hi {
            let mid = k + (hi - k) / 2;
            if reaches(mid) {
                hi = mid;
            } else {
                k = mid + 1;
            }
        }
        bounds.push((k * beta).min(m));
        lo = k;
    }
    bounds.push(m);
    bounds
}

pub fn build_bcoh(a: &TripletMatrix, beta: BlockSize, p: usize, layout: BcohLayout) -> Result<BcohMatrix> {
    if p == 0 {
        return Err(Error::InvalidArgument("thread count must be at least 1".into()));
    }
    beta.check_cap(BCOH_INDEX_BITS)?;
    let grid = Grid::new(a.m(), a.n(), beta);
    let limit = 1usize << 15;
    if grid.block_cols >= limit {
        return Err(Error::IndexOverflow(format!(
            "{} block columns do not fit signed 16-bit increments",
            grid.block_cols
        )));
    }
    let b = beta.log2();
    let level = covering_level(a.m().max(a.n()).max(1) as u64).max(b);
    if level > MAX_LEVEL {
        return Err(Error::IndexOverflow(format!("Hilbert level {level} does not fit 64-bit keys")));
    }
    let grid_level = level - b;

    let mut prefix = Vec::with_capacity(a.m() + 1);
    prefix.push(0);
    for c in a.row_counts() {
        prefix.push(prefix.last().unwrap() + c);
    }
    let bounds = partition_rows_by_nnz(&prefix, p, beta.beta());
    for w in bounds.windows(2) {
        let rows = (w[1] - w[0]).div_ceil(beta.beta());
        if rows >= limit {
            return Err(Error::IndexOverflow(format!("band of {rows} block rows does not fit signed 16-bit increments")));
        }
        let band_nnz = prefix[w[1]] - prefix[w[0]];
        if band_nnz > u32::MAX as usize {
            return Err(Error::IndexOverflow(format!("band with {band_nnz} nonzeros exceeds 32-bit offsets")));
        }
    }

    // Bucket elements by band, then sort each band independently.
    let rows = a.row_ind();
    let band_of: Vec<usize> = rows
        .par_iter()
        .map(|&r| bounds.partition_point(|&bd| bd <= r as usize) - 1)
        .collect();
    let mut buckets: Vec<Vec<usize>> = (0..p).map(|t| Vec::with_capacity(prefix[bounds[t + 1]] - prefix[bounds[t]])).collect();
    for (i, &t) in band_of.iter().enumerate() {
        buckets[t].push(i);
    }

    let bands = buckets
        .into_par_iter()
        .enumerate()
        .map(|(t, elements)| build_band(a, &grid, grid_level, layout, bounds[t], bounds[t + 1], &elements))
        .collect();
    Ok(BcohMatrix {
        m: a.m(),
        n: a.n(),
        beta,
        layout,
        bands,
    })
}

fn build_band(
    a: &TripletMatrix,
    grid: &Grid,
    grid_level: u32,
    layout: BcohLayout,
    first_row: usize,
    end_row: usize,
    elements: &[usize],
) -> Band {
    let b = grid.beta.log2();
    let beta = grid.beta.beta();
    let mask = (beta - 1) as u64;
    let level = grid_level + b;
    let sorted = match layout.in_block_order() {
        InBlockOrder::RowWise => sort_subset_by_key(elements, |i| {
            let (r, c, _) = a.entry(i);
            let (r, c) = (r as u64, c as u64);
            (hilbert_rank(r >> b, c >> b, grid_level) << (2 * b)) | ((r & mask) << b) | (c & mask)
        }),
        InBlockOrder::Hilbert => sort_subset_by_key(elements, |i| {
            let (r, c, _) = a.entry(i);
            hilbert_rank(r as u64, c as u64, level)
        }),
    };

    let block_row0 = (first_row >> b) as u64;
    let block_rows = (end_row - first_row).div_ceil(beta);
    let block_cols = grid.block_cols;
    let entries: Vec<(usize, usize, f64)> = sorted.iter().map(|&(_, i)| a.entry(i)).collect();
    let block_of = |&(r, c, _): &(usize, usize, f64)| ((r >> b) - block_row0 as usize, c >> b);

    // Runs of equal block coordinates, in storage order.
    let mut runs: Vec<((usize, usize), Range<usize>)> = Vec::new();
    for (k, e) in entries.iter().enumerate() {
        let blk = block_of(e);
        match runs.last_mut() {
            Some((last, range)) if *last == blk => range.end = k + 1,
            _ => runs.push((blk, k..k + 1)),
        }
    }

    let blocks = match layout.block_level() {
        BlockLevel::Bicrs => {
            let block_nnz = runs.iter().map(|(_, r)| r.len() as u32).collect();
            let (row_jump, col_jump) = encode_block_jumps(runs.iter().map(|&(blk, _)| blk), block_cols);
            BandBlocks::Bicrs {
                block_nnz,
                row_jump,
                col_jump,
            }
        }
        BlockLevel::HilbertPtr => {
            let mut blk_ptr = vec![0u32];
            let mut next = runs.iter().peekable();
            hilbert_for_each_in_rect(
                grid_level,
                block_row0..block_row0 + block_rows as u64,
                0..block_cols as u64,
                &mut |_, br, bc| {
                    let mut end = *blk_ptr.last().unwrap();
                    if let Some(((r, c), range)) = next.peek() {
                        if (*r as u64 + block_row0, *c as u64) == (br, bc) {
                            end = range.end as u32;
                            next.next();
                        }
                    }
                    blk_ptr.push(end);
                },
            );
            debug_assert!(next.peek().is_none());
            BandBlocks::HilbertPtr { blk_ptr }
        }
    };

    let data: Vec<f64> = entries.iter().map(|e| e.2).collect();
    let elements = match layout.in_block() {
        InBlockStorage::Packed => BandElements::Packed {
            packed: entries
                .iter()
                .map(|&(r, c, _)| PackedIndex::pack_unchecked(r & (beta - 1), c & (beta - 1)))
                .collect(),
            data,
        },
        InBlockStorage::Icrs => {
            let mut col_inc = Vec::with_capacity(entries.len() + runs.len());
            let mut row_jump = Vec::new();
            for (_, range) in &runs {
                let local = |k: usize| (entries[k].0 & (beta - 1), entries[k].1 & (beta - 1));
                let (mut i, mut j) = local(range.start);
                row_jump.push(i as u16);
                col_inc.push(j as u16);
                for k in range.start + 1..range.end {
                    let (ni, nj) = local(k);
                    if ni == i {
                        col_inc.push((nj - j) as u16);
                    } else {
                        col_inc.push((nj + beta - j) as u16);
                        row_jump.push((ni - i) as u16);
                    }
                    (i, j) = (ni, nj);
                }
                col_inc.push((beta - j) as u16);
            }
            BandElements::Icrs { col_inc, row_jump, data }
        }
    };

    Band {
        first_row,
        row_count: end_row - first_row,
        block_row0,
        block_rows,
        block_cols,
        grid_level,
        beta_log2: b,
        blocks,
        elements,
    }
}

/// BICRS jumps over a sequence of `(block_row, block_col)` with `block_cols < 2^15`.
fn encode_block_jumps(blocks: impl Iterator<Item = (usize, usize)>, block_cols: usize) -> (Vec<i16>, Vec<i16>) {
    let mut row_jump = Vec::new();
    let mut col_jump = Vec::new();
    let mut prev: Option<(usize, usize)> = None;
    for (r, c) in blocks {
        match prev {
            None => {
                row_jump.push(r as i16);
                col_jump.push(c as i16);
            }
            Some((pr, pc)) if pr == r => col_jump.push((c as i32 - pc as i32) as i16),
            Some((pr, pc)) => {
                col_jump.push((c as i32 - pc as i32 + block_cols as i32) as u16 as i16);
                row_jump.push((r as i32 - pr as i32) as i16);
            }
        }
        prev = Some((r, c));
    }
    if let Some((_, pc)) = prev {
        col_jump.push((block_cols - pc) as u16 as i16);
    }
    (row_jump, col_jump)
}

impl Band {
    pub fn first_row(&self) -> usize {
        self.first_row
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn rows(&self) -> Range<usize> {
        self.first_row..self.first_row + self.row_count
    }

    pub fn blocks(&self) -> &BandBlocks {
        &self.blocks
    }

    pub fn elements(&self) -> &BandElements {
        &self.elements
    }

    pub fn nnz(&self) -> usize {
        match &self.elements {
            BandElements::Icrs { data, .. } | BandElements::Packed { data, .. } => data.len(),
        }
    }

    /// Calls `f(band_block_row, block_col, element_range)` for every nonempty
    /// block in storage order.
    pub fn for_each_block<F: FnMut(usize, usize, Range<usize>)>(&self, mut f: F) {
        match &self.blocks {
            BandBlocks::Bicrs {
                block_nnz,
                row_jump,
                col_jump,
            } => {
                if block_nnz.is_empty() {
                    return;
                }
                let cols = self.block_cols as u16;
                let mut br = row_jump[0] as i32;
                let mut bc = col_jump[0] as u16;
                let mut rj = 1;
                let mut start = 0usize;
                for k in 0..block_nnz.len() {
                    let end = start + block_nnz[k] as usize;
                    f(br as usize, bc as usize, start..end);
                    start = end;
                    let t = bc.wrapping_add(col_jump[k + 1] as u16);
                    if t < cols {
                        bc = t;
                    } else {
                        bc = t - cols;
                        if k + 1 < block_nnz.len() {
                            br += row_jump[rj] as i32;
                            rj += 1;
                        }
                    }
                }
            }
            BandBlocks::HilbertPtr { blk_ptr } => {
                let mut k = 0;
                let row0 = self.block_row0;
                hilbert_for_each_in_rect(
                    self.grid_level,
                    row0..row0 + self.block_rows as u64,
                    0..self.block_cols as u64,
                    &mut |_, br, bc| {
                        let range = blk_ptr[k] as usize..blk_ptr[k + 1] as usize;
                        k += 1;
                        if !range.is_empty() {
                            f((br - row0) as usize, bc as usize, range);
                        }
                    },
                );
            }
        }
    }

    /// Calls `f(band_row, col, value)` for every nonzero in storage order.
    #[inline]
    pub fn for_each_entry<F: FnMut(usize, usize, f64)>(&self, mut f: F) {
        let beta = 1usize << self.beta_log2;
        match &self.elements {
            BandElements::Packed { packed, data } => self.for_each_block(|br, bc, range| {
                let (ro, co) = (br * beta, bc * beta);
                for e in range {
                    let (r, c) = packed[e].unpack();
                    f(ro + r as usize, co + c as usize, data[e]);
                }
            }),
            BandElements::Icrs { col_inc, row_jump, data } => {
                let mut rj = 0;
                let mut seen = 0;
                self.for_each_block(|br, bc, range| {
                    let (ro, co) = (br * beta, bc * beta);
                    let incs = &col_inc[range.start + seen..range.end + seen + 1];
                    seen += 1;
                    let mut i = row_jump[rj] as usize;
                    rj += 1;
                    let mut j = incs[0] as usize;
                    let nnz = range.len();
                    for (k, e) in range.enumerate() {
                        f(ro + i, co + j, data[e]);
                        j += incs[k + 1] as usize;
                        if j >= beta {
                            j -= beta;
                            if k + 1 < nnz {
                                i += row_jump[rj] as usize;
                                rj += 1;
                            }
                        }
                    }
                })
            }
        }
    }

    /// `y_band += A_band x` where `y_band` covers exactly this band's rows.
    #[inline]
    pub(crate) fn multiply(&self, x: &[f64], y_band: &mut [f64]) {
        self.for_each_entry(|r, c, v| y_band[r] += v * x[c]);
    }

    /// Bytes of the block-level structure.
    pub fn block_level_bytes(&self) -> usize {
        match &self.blocks {
            BandBlocks::Bicrs {
                block_nnz,
                row_jump,
                col_jump,
            } => 4 * block_nnz.len() + 2 * (row_jump.len() + col_jump.len()),
            BandBlocks::HilbertPtr { blk_ptr } => 4 * blk_ptr.len(),
        }
    }

    /// Bytes of the in-block index structure.
    pub fn in_block_bytes(&self) -> usize {
        match &self.elements {
            BandElements::Icrs { col_inc, row_jump, .. } => 2 * (col_inc.len() + row_jump.len()),
            BandElements::Packed { packed, .. } => 4 * packed.len(),
        }
    }
}

impl BcohMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.bands.iter().map(Band::nnz).sum()
    }

    pub fn beta(&self) -> BlockSize {
        self.beta
    }

    pub fn layout(&self) -> BcohLayout {
        self.layout
    }

    pub fn threads(&self) -> usize {
        self.bands.len()
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn block_level_bytes(&self) -> usize {
        self.bands.iter().map(Band::block_level_bytes).sum()
    }

    pub fn index_bytes(&self) -> usize {
        self.bands.iter().map(|b| b.block_level_bytes() + b.in_block_bytes()).sum()
    }

    /// Entries in storage order, band after band.
    pub fn storage_order(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for band in &self.bands {
            band.for_each_entry(|r, c, v| out.push((band.first_row + r, c, v)));
        }
        out
    }

    pub fn to_triplet(&self) -> Result<TripletMatrix> {
        TripletMatrix::from_entries(self.m, self.n, self.storage_order())
    }

    /// Sequential sweep over the bands.
    pub fn spmv_seq(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("x", self.n, x.len())?;
        let mut y = vec![0.0; self.m];
        for band in &self.bands {
            band.multiply(x, &mut y[band.rows()]);
        }
        Ok(y)
    }
}
