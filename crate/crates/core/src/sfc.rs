//! Z-Morton and Hilbert curve arithmetic on `2^level x 2^level` grids.
//!
//! Coordinates are `(row, col)` with row 0 at the top. Z-Morton visits the
//! quadrants top-left, top-right, bottom-left, bottom-right. The Hilbert
//! curve starts top-left, runs down the left edge first and finishes
//! top-right: at level 1 it visits (0,0), (1,0), (1,1), (0,1). That overall
//! orientation is the same at every level.

use crate::blocked::PackedIndex;
use crate::{Error, Result};

/// Largest supported level; ranks must fit in 64 bits.
pub const MAX_LEVEL: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    ZMorton,
    Hilbert,
}

/// A rank along a curve on a `2^level x 2^level` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CurveIndex {
    pub value: u64,
    pub level: u32,
}

/// Smallest level whose grid side covers `extent` cells.
pub fn covering_level(extent: u64) -> u32 {
    if extent <= 1 {
        0
    } else {
        64 - (extent - 1).leading_zeros()
    }
}

fn check_grid(row: u64, col: u64, level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::IndexOverflow(format!("curve level {level} exceeds {MAX_LEVEL}")));
    }
    let side = 1u64 << level;
    if row >= side || col >= side {
        return Err(Error::OutOfGrid { row, col, side });
    }
    Ok(())
}

/// Spreads the low 32 bits of `v` so bit `i` lands on bit `2i`.
#[inline]
fn spread(v: u64) -> u64 {
    let mut v = v & 0xffff_ffff;
    v = (v | (v << 16)) & 0x0000_ffff_0000_ffff;
    v = (v | (v << 8)) & 0x00ff_00ff_00ff_00ff;
    v = (v | (v << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    v = (v | (v << 2)) & 0x3333_3333_3333_3333;
    (v | (v << 1)) & 0x5555_5555_5555_5555
}

#[inline]
fn compact(v: u64) -> u64 {
    let mut v = v & 0x5555_5555_5555_5555;
    v = (v | (v >> 1)) & 0x3333_3333_3333_3333;
    v = (v | (v >> 2)) & 0x0f0f_0f0f_0f0f_0f0f;
    v = (v | (v >> 4)) & 0x00ff_00ff_00ff_00ff;
    v = (v | (v >> 8)) & 0x0000_ffff_0000_ffff;
    (v | (v >> 16)) & 0x0000_0000_ffff_ffff
}

/// Z-Morton rank: row bits interleaved above column bits.
#[inline]
pub fn morton_rank(row: u64, col: u64) -> u64 {
    (spread(row) << 1) | spread(col)
}

pub fn morton_encode(row: u64, col: u64, level: u32) -> Result<CurveIndex> {
    check_grid(row, col, level)?;
    Ok(CurveIndex {
        value: morton_rank(row, col),
        level,
    })
}

pub fn morton_decode(index: CurveIndex) -> (u64, u64) {
    (compact(index.value >> 1), compact(index.value))
}

/// Orientation of a Hilbert sub-curve relative to the base curve.
///
/// Every orientation is the base curve composed with an optional transpose
/// and an optional 180 degree rotation; both are involutions and commute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct HilbertState {
    transpose: bool,
    rotate: bool,
}

impl HilbertState {
    pub const BASE: HilbertState = HilbertState {
        transpose: false,
        rotate: false,
    };

    /// Maps actual quadrant bits to the frame of the base curve.
    #[inline(always)]
    fn to_frame(self, row_bit: u64, col_bit: u64) -> (u64, u64) {
        let flip = self.rotate as u64;
        let (r, c) = (row_bit ^ flip, col_bit ^ flip);
        if self.transpose {
            (c, r)
        } else {
            (r, c)
        }
    }

    #[inline(always)]
    fn child_in_frame(self, r: u64, c: u64) -> HilbertState {
        if r == 0 {
            HilbertState {
                transpose: !self.transpose,
                rotate: self.rotate ^ (c == 1),
            }
        } else {
            self
        }
    }

    /// Visiting position (0..4) of the quadrant with the given row/column bits.
    #[inline(always)]
    pub fn position(self, row_bit: u64, col_bit: u64) -> u64 {
        let (r, c) = self.to_frame(row_bit, col_bit);
        (3 * c) ^ r
    }

    /// Orientation used inside the quadrant with the given row/column bits.
    #[inline(always)]
    pub fn child(self, row_bit: u64, col_bit: u64) -> HilbertState {
        let (r, c) = self.to_frame(row_bit, col_bit);
        self.child_in_frame(r, c)
    }

    /// Row/column bits of the quadrant visited at `position`.
    #[inline(always)]
    pub fn quadrant(self, position: u64) -> (u64, u64) {
        let c = (position >> 1) & 1;
        let r = (position ^ c) & 1;
        // The frame map is its own inverse.
        self.to_frame(r, c)
    }
}

/// Hilbert rank of `(row, col)` at `level` starting from orientation `state`.
#[inline]
pub fn hilbert_rank_from(row: u64, col: u64, level: u32, mut state: HilbertState) -> u64 {
    let mut rank = 0u64;
    for bit in (0..level).rev() {
        let (rb, cb) = ((row >> bit) & 1, (col >> bit) & 1);
        let (r, c) = state.to_frame(rb, cb);
        rank = (rank << 2) | ((3 * c) ^ r);
        state = state.child_in_frame(r, c);
    }
    rank
}

/// Hilbert rank in the base orientation; no bounds checks.
#[inline]
pub fn hilbert_rank(row: u64, col: u64, level: u32) -> u64 {
    hilbert_rank_from(row, col, level, HilbertState::BASE)
}

pub fn hilbert_encode(row: u64, col: u64, level: u32) -> Result<CurveIndex> {
    check_grid(row, col, level)?;
    Ok(CurveIndex {
        value: hilbert_rank(row, col, level),
        level,
    })
}

pub fn hilbert_decode(index: CurveIndex) -> (u64, u64) {
    let mut state = HilbertState::BASE;
    let (mut row, mut col) = (0u64, 0u64);
    for bit in (0..index.level).rev() {
        let pos = (index.value >> (2 * bit)) & 3;
        let (rb, cb) = state.quadrant(pos);
        row |= rb << bit;
        col |= cb << bit;
        state = state.child(rb, cb);
    }
    (row, col)
}

/// Rank of `(row, col)` along `curve` at `level`, base orientation.
#[inline]
pub fn curve_rank(curve: CurveKind, row: u64, col: u64, level: u32) -> u64 {
    match curve {
        CurveKind::ZMorton => morton_rank(row, col),
        CurveKind::Hilbert => hilbert_rank(row, col, level),
    }
}

/// Calls `f(rank, row, col)` for every cell of the `2^level` grid that lies
/// inside `rows x cols`, in Hilbert order. Quadrants disjoint from the
/// rectangle are pruned without being enumerated.
pub fn hilbert_for_each_in_rect<F>(level: u32, rows: std::ops::Range<u64>, cols: std::ops::Range<u64>, f: &mut F)
where
    F: FnMut(u64, u64, u64),
{
    fn walk<F: FnMut(u64, u64, u64)>(
        level: u32,
        state: HilbertState,
        origin: (u64, u64),
        rank: u64,
        rows: &std::ops::Range<u64>,
        cols: &std::ops::Range<u64>,
        f: &mut F,
    ) {
        let side = 1u64 << level;
        if origin.0 >= rows.end || origin.0 + side <= rows.start || origin.1 >= cols.end || origin.1 + side <= cols.start {
            return;
        }
        if level == 0 {
            f(rank, origin.0, origin.1);
            return;
        }
        let half = side >> 1;
        let quarter = 1u64 << (2 * (level - 1));
        for pos in 0..4 {
            let (rb, cb) = state.quadrant(pos);
            walk(
                level - 1,
                state.child(rb, cb),
                (origin.0 + rb * half, origin.1 + cb * half),
                rank + pos * quarter,
                rows,
                cols,
                f,
            );
        }
    }
    if rows.start < rows.end && cols.start < cols.end {
        walk(level, HilbertState::BASE, (0, 0), 0, &rows, &cols, f);
    }
}

/// Split of a curve-ordered sub-block into its four quadrants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadrantSplit {
    /// Element offsets where the 2nd, 3rd and 4th visited quadrants begin.
    pub offsets: [usize; 3],
    /// `(row_bit, col_bit, child orientation)` of each quadrant in visiting order.
    pub quadrants: [(u64, u64, HilbertState); 4],
}

impl QuadrantSplit {
    /// Element range of the quadrant visited at `position`.
    pub fn range(&self, position: usize, len: usize) -> std::ops::Range<usize> {
        let start = if position == 0 { 0 } else { self.offsets[position - 1] };
        let end = if position == 3 { len } else { self.offsets[position] };
        start..end
    }
}

/// Finds the quadrant boundaries of an aligned `dim x dim` sub-block whose
/// elements are sorted along `curve` (in `orientation` for Hilbert) by binary
/// search. Z-Morton ignores `orientation` and yields the base orientation.
pub fn quadrant_boundaries(
    packed: &[PackedIndex],
    dim: u32,
    curve: CurveKind,
    orientation: HilbertState,
) -> Result<QuadrantSplit> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("sub-block side {dim} must be a power of two >= 2")));
    }
    let half = (dim / 2) as u64;
    let state = match curve {
        CurveKind::ZMorton => HilbertState::BASE,
        CurveKind::Hilbert => orientation,
    };
    let position = |p: &PackedIndex| {
        let (r, c) = p.unpack();
        let (rb, cb) = (((r as u64) & half != 0) as u64, ((c as u64) & half != 0) as u64);
        match curve {
            CurveKind::ZMorton => 2 * rb + cb,
            CurveKind::Hilbert => state.position(rb, cb),
        }
    };
    #[cfg(debug_assertions)]
    if let Some(i) = packed.windows(2).position(|w| position(&w[0]) > position(&w[1])) {
        return Err(Error::UnsortedCurveOrder(i + 1));
    }
    let mut offsets = [0usize; 3];
    for (k, offset) in offsets.iter_mut().enumerate() {
        *offset = packed.partition_point(|p| position(p) <= k as u64);
    }
    let mut quadrants = [(0, 0, HilbertState::BASE); 4];
    for (pos, q) in quadrants.iter_mut().enumerate() {
        let (rb, cb) = match curve {
            CurveKind::ZMorton => ((pos as u64) >> 1, (pos as u64) & 1),
            CurveKind::Hilbert => state.quadrant(pos as u64),
        };
        let child = match curve {
            CurveKind::ZMorton => HilbertState::BASE,
            CurveKind::Hilbert => state.child(rb, cb),
        };
        *q = (rb, cb, child);
    }
    Ok(QuadrantSplit { offsets, quadrants })
}
