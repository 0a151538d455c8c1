use rayon::prelude::*;

use super::WorkerPool;
use crate::blocked::{CsbMatrix, PackedIndex};
use crate::formats::check_len;
use crate::sfc::{quadrant_boundaries, CurveKind, HilbertState};
use crate::Result;

/// Task-parallel CSB with the default split threshold of `2 * beta` nonzeros.
pub fn spmv_csb(a: &CsbMatrix, x: &[f64], pool: &WorkerPool) -> Result<Vec<f64>> {
    spmv_csb_with_threshold(a, x, pool, 2 * a.beta().beta())
}

/// One task per block row. A block row holding more than `threshold`
/// nonzeros is cut into groups of consecutive blocks that are reduced through
/// temporaries in a fixed binary tree; a single block above the threshold is
/// split recursively into quadrants along its curve.
pub fn spmv_csb_with_threshold(a: &CsbMatrix, x: &[f64], pool: &WorkerPool, threshold: usize) -> Result<Vec<f64>> {
    let mut y = vec![0.0; a.m()];
    spmv_csb_into(a, x, &mut y, pool, threshold)?;
    Ok(y)
}

/// [`spmv_csb_with_threshold`] into a caller-provided output.
pub fn spmv_csb_into(a: &CsbMatrix, x: &[f64], y: &mut [f64], pool: &WorkerPool, threshold: usize) -> Result<()> {
    check_len("x", a.n(), x.len())?;
    check_len("y", a.m(), y.len())?;
    let threshold = threshold.max(1);
    let beta = a.beta().beta();
    pool.rayon().install(|| {
        y.par_iter_mut().for_each(|v| *v = 0.0);
        y.par_chunks_mut(beta).with_max_len(1).enumerate().for_each(|(br, y_row)| {
            if a.block_row_nnz(br) <= threshold {
                for bc in 0..a.block_cols() {
                    multiply_block(a, br, bc, x, y_row, threshold, false);
                }
            } else {
                let groups = group_blocks(a, br, threshold);
                reduce_groups(a, br, &groups, x, y_row, threshold);
            }
        })
    });
    Ok(())
}

/// Greedy runs of consecutive block columns with at most `threshold`
/// nonzeros each (a heavier single block forms its own run).
fn group_blocks(a: &CsbMatrix, br: usize, threshold: usize) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let (mut start, mut load) = (0, 0);
    for bc in 0..a.block_cols() {
        let nnz = a.block_range(br, bc).len();
        if bc > start && load + nnz > threshold {
            groups.push(start..bc);
            (start, load) = (bc, 0);
        }
        load += nnz;
    }
    groups.push(start..a.block_cols());
    groups
}

fn reduce_groups(
    a: &CsbMatrix,
    br: usize,
    groups: &[std::ops::Range<usize>],
    x: &[f64],
    y_row: &mut [f64],
    threshold: usize,
) {
    if let [group] = groups {
        for bc in group.clone() {
            multiply_block(a, br, bc, x, y_row, threshold, true);
        }
        return;
    }
    let (left, right) = groups.split_at(groups.len() / 2);
    let len = y_row.len();
    let ((), temp) = rayon::join(
        || reduce_groups(a, br, left, x, y_row, threshold),
        || {
            let mut temp = vec![0.0; len];
            reduce_groups(a, br, right, x, &mut temp, threshold);
            temp
        },
    );
    for (yi, t) in y_row.iter_mut().zip(temp) {
        *yi += t;
    }
}

fn multiply_block(a: &CsbMatrix, br: usize, bc: usize, x: &[f64], y_row: &mut [f64], threshold: usize, split: bool) {
    let range = a.block_range(br, bc);
    if range.is_empty() {
        return;
    }
    let beta = a.beta().beta();
    let packed = &a.packed()[range.clone()];
    let data = &a.data()[range];
    let x_win = &x[bc * beta..];
    if split && packed.len() > threshold {
        split_block(packed, data, x_win, y_row, 0, beta as u32, a.curve(), HilbertState::BASE, threshold);
    } else {
        multiply_offset(packed, data, x_win, y_row, 0);
    }
}

#[inline]
fn multiply_offset(packed: &[PackedIndex], data: &[f64], x: &[f64], y: &mut [f64], row_off: usize) {
    for (p, &v) in packed.iter().zip(data) {
        let (r, c) = p.unpack();
        y[r as usize - row_off] += v * x[c as usize];
    }
}

/// Multiplies an aligned `dim x dim` sub-block whose top row is `row_off`.
/// Quadrants on opposite diagonals touch disjoint output rows, so the pairs
/// (top-left, bottom-right) and (top-right, bottom-left) run concurrently.
#[allow(clippy::too_many_arguments)]
fn split_block(
    packed: &[PackedIndex],
    data: &[f64],
    x: &[f64],
    y: &mut [f64],
    row_off: usize,
    dim: u32,
    curve: CurveKind,
    orientation: HilbertState,
    threshold: usize,
) {
    if packed.len() <= threshold || dim < 2 {
        return multiply_offset(packed, data, x, y, row_off);
    }
    let Ok(split) = quadrant_boundaries(packed, dim, curve, orientation) else {
        return multiply_offset(packed, data, x, y, row_off);
    };
    let half = dim as usize / 2;
    let mut parts: [(std::ops::Range<usize>, HilbertState); 4] = Default::default();
    for (pos, &(rb, cb, child)) in split.quadrants.iter().enumerate() {
        parts[(2 * rb + cb) as usize] = (split.range(pos, packed.len()), child);
    }
    let (top, bottom) = y.split_at_mut(half.min(y.len()));
    let run = |quadrant: usize, y: &mut [f64], off: usize| {
        let (range, child) = parts[quadrant].clone();
        split_block(&packed[range.clone()], &data[range], x, y, off, dim / 2, curve, child, threshold);
    };
    rayon::join(|| run(0, top, row_off), || run(3, bottom, row_off + half));
    rayon::join(|| run(1, top, row_off), || run(2, bottom, row_off + half));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocked::{build_csb, BlockSize};
    use crate::formats::TripletMatrix;
    use crate::testutil::{assert_close, dense_oracle, e4, random_matrix, random_vector};

    fn beta(b: usize) -> BlockSize {
        BlockSize::from_beta(b).unwrap()
    }

    #[test]
    fn e4_two_workers() {
        let a = build_csb(&e4(), beta(2), CurveKind::ZMorton).unwrap();
        let pool = WorkerPool::new(2).unwrap();
        assert_eq!(spmv_csb(&a, &[1.0; 4], &pool).unwrap(), vec![3.0, 3.0, 0.0, 9.0]);
    }

    #[test]
    fn single_worker_high_threshold_is_sequential() {
        let t = random_matrix(200, 170, 0.05, 1);
        let x = random_vector(170, 2);
        let pool = WorkerPool::new(1).unwrap();
        for curve in [CurveKind::ZMorton, CurveKind::Hilbert] {
            let a = build_csb(&t, beta(16), curve).unwrap();
            assert_eq!(spmv_csb_with_threshold(&a, &x, &pool, usize::MAX).unwrap(), a.spmv_seq(&x).unwrap());
        }
    }

    #[test]
    fn dense_block_row_is_split() {
        // One block row, every block dense: both row grouping and in-block
        // quadrant splitting engage.
        let t = TripletMatrix::from_entries(16, 64, (0..16 * 64).map(|k| (k / 64, k % 64, 1.0 + (k % 7) as f64))).unwrap();
        let x = random_vector(64, 3);
        let pool = WorkerPool::new(4).unwrap();
        for curve in [CurveKind::ZMorton, CurveKind::Hilbert] {
            let a = build_csb(&t, beta(16), curve).unwrap();
            assert_eq!(group_blocks(&a, 0, 32).len(), 4);
            for threshold in [1, 5, 32, 300] {
                let y = spmv_csb_with_threshold(&a, &x, &pool, threshold).unwrap();
                assert_close(&t, &x, &y, &dense_oracle(&t, &x), 1e-12);
            }
        }
    }

    #[test]
    fn ragged_edges() {
        let t = random_matrix(77, 53, 0.2, 4);
        let x = random_vector(53, 5);
        let pool = WorkerPool::new(3).unwrap();
        for curve in [CurveKind::ZMorton, CurveKind::Hilbert] {
            let a = build_csb(&t, beta(32), curve).unwrap();
            for threshold in [1, 8, 64] {
                let y = spmv_csb_with_threshold(&a, &x, &pool, threshold).unwrap();
                assert_close(&t, &x, &y, &t.spmv(&x).unwrap(), 1e-12);
            }
        }
    }

    #[test]
    fn grouping_respects_threshold() {
        let t = random_matrix(8, 256, 0.5, 6);
        let a = build_csb(&t, beta(8), CurveKind::ZMorton).unwrap();
        let groups = group_blocks(&a, 0, 40);
        assert_eq!(groups.first().unwrap().start, 0);
        assert_eq!(groups.last().unwrap().end, a.block_cols());
        assert!(groups.windows(2).all(|w| w[0].end == w[1].start));
        for g in &groups {
            let load: usize = g.clone().map(|bc| a.block_range(0, bc).len()).sum();
            assert!(load <= 40 || g.len() == 1);
        }
    }
}
