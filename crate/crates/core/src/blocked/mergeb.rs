use rayon::prelude::*;

use super::bcoh::InBlockOrder;
use super::csb::multiply_packed;
use super::{sort_block_row_major, BlockSize, Grid, PackedIndex, CSB_INDEX_BITS};
use crate::formats::{check_len, TripletMatrix};
use crate::sfc::hilbert_rank;
use crate::{to_idx, Idx, Result};

/// Sparse blocks treated as the nonzeros of a CRS block matrix.
///
/// Only nonempty blocks are stored. `blk_data_ptr[k]..blk_data_ptr[k + 1]`
/// is the packed-triplet range of the `k`-th stored block.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeBlockMatrix {
    m: usize,
    n: usize,
    grid: Grid,
    order: InBlockOrder,
    blk_row_ptr: Vec<Idx>,
    blk_col_ind: Vec<Idx>,
    blk_data_ptr: Vec<Idx>,
    packed: Vec<PackedIndex>,
    data: Vec<f64>,
}

pub fn build_mergeb(a: &TripletMatrix, beta: BlockSize, hilbert_inside: bool) -> Result<MergeBlockMatrix> {
    beta.check_cap(CSB_INDEX_BITS)?;
    let grid = Grid::new(a.m(), a.n(), beta);
    grid.check_key_width()?;
    to_idx(a.nnz(), "nnz")?;
    let b = beta.log2();
    let order = if hilbert_inside {
        InBlockOrder::Hilbert
    } else {
        InBlockOrder::RowWise
    };
    let sorted = if hilbert_inside {
        sort_block_row_major(a, &grid, |r, c| hilbert_rank(r, c, b))
    } else {
        sort_block_row_major(a, &grid, |r, c| (r << b) | c)
    };

    let mut blk_row_ptr = vec![0 as Idx; grid.block_rows + 1];
    let mut blk_col_ind = Vec::new();
    let mut blk_data_ptr = Vec::new();
    let mut current = None;
    for (k, &(key, _)) in sorted.iter().enumerate() {
        let cell = key >> (2 * b);
        if current != Some(cell) {
            current = Some(cell);
            let (br, bc) = ((cell / grid.block_cols as u64) as usize, (cell % grid.block_cols as u64) as usize);
            blk_row_ptr[br + 1] += 1;
            blk_col_ind.push(bc as Idx);
            blk_data_ptr.push(k as Idx);
        }
    }
    blk_data_ptr.push(sorted.len() as Idx);
    for i in 0..grid.block_rows {
        blk_row_ptr[i + 1] += blk_row_ptr[i];
    }
    let mask = beta.beta() - 1;
    let (packed, data) = sorted
        .par_iter()
        .map(|&(_, i)| {
            let (r, c, v) = a.entry(i);
            (PackedIndex::pack_unchecked(r & mask, c & mask), v)
        })
        .unzip();
    Ok(MergeBlockMatrix {
        m: a.m(),
        n: a.n(),
        grid,
        order,
        blk_row_ptr,
        blk_col_ind,
        blk_data_ptr,
        packed,
        data,
    })
}

impl MergeBlockMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn beta(&self) -> BlockSize {
        self.grid.beta
    }

    pub fn in_block_order(&self) -> InBlockOrder {
        self.order
    }

    pub fn block_rows(&self) -> usize {
        self.grid.block_rows
    }

    pub fn block_count(&self) -> usize {
        self.blk_col_ind.len()
    }

    pub fn blk_row_ptr(&self) -> &[Idx] {
        &self.blk_row_ptr
    }

    pub fn blk_col_ind(&self) -> &[Idx] {
        &self.blk_col_ind
    }

    pub fn blk_data_ptr(&self) -> &[Idx] {
        &self.blk_data_ptr
    }

    /// Multiplies stored block `k` into `y_block` (the block row's output window).
    #[inline]
    pub(crate) fn multiply_block(&self, k: usize, x: &[f64], y_block: &mut [f64]) {
        let range = self.blk_data_ptr[k] as usize..self.blk_data_ptr[k + 1] as usize;
        let x_off = self.blk_col_ind[k] as usize * self.grid.beta.beta();
        multiply_packed(&self.packed[range.clone()], &self.data[range], &x[x_off..], y_block);
    }

    pub fn storage_order(&self) -> Vec<(usize, usize, f64)> {
        let beta = self.grid.beta.beta();
        let mut out = Vec::with_capacity(self.nnz());
        for br in 0..self.grid.block_rows {
            for k in self.blk_row_ptr[br] as usize..self.blk_row_ptr[br + 1] as usize {
                let bc = self.blk_col_ind[k] as usize;
                for e in self.blk_data_ptr[k] as usize..self.blk_data_ptr[k + 1] as usize {
                    let (r, c) = self.packed[e].unpack();
                    out.push((br * beta + r as usize, bc * beta + c as usize, self.data[e]));
                }
            }
        }
        out
    }

    pub fn to_triplet(&self) -> Result<TripletMatrix> {
        TripletMatrix::from_entries(self.m, self.n, self.storage_order())
    }

    /// Sequential sweep over block rows and their blocks.
    pub fn spmv_seq(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("x", self.n, x.len())?;
        let mut y = vec![0.0; self.m];
        for (br, y_block) in y.chunks_mut(self.grid.beta.beta()).enumerate() {
            for k in self.blk_row_ptr[br] as usize..self.blk_row_ptr[br + 1] as usize {
                self.multiply_block(k, x, y_block);
            }
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_close, e4, random_matrix, random_vector};

    #[test]
    fn e4_block_crs() {
        let mb = build_mergeb(&e4(), BlockSize::from_beta(2).unwrap(), false).unwrap();
        assert_eq!(mb.blk_row_ptr(), &[0, 2, 4]);
        assert_eq!(mb.blk_col_ind(), &[0, 1, 0, 1]);
        assert_eq!(mb.blk_data_ptr(), &[0, 2, 3, 4, 5]);
        assert_eq!(mb.spmv_seq(&[1.0; 4]).unwrap(), vec![3.0, 3.0, 0.0, 9.0]);
    }

    #[test]
    fn empty_matrix() {
        let mb = build_mergeb(&TripletMatrix::empty(7, 7).unwrap(), BlockSize::from_beta(2).unwrap(), true).unwrap();
        assert!(mb.blk_row_ptr().iter().all(|&p| p == 0));
        assert_eq!(mb.block_count(), 0);
    }

    #[test]
    fn hilbert_inside_dense_block() {
        let a = TripletMatrix::from_entries(2, 2, [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 4.0)]).unwrap();
        let mb = build_mergeb(&a, BlockSize::from_beta(2).unwrap(), true).unwrap();
        let order: Vec<(usize, usize)> = mb.storage_order().iter().map(|&(r, c, _)| (r, c)).collect();
        assert_eq!(order, vec![(0, 0), (1, 0), (1, 1), (0, 1)]);
        let row_wise = build_mergeb(&a, BlockSize::from_beta(2).unwrap(), false).unwrap();
        let order: Vec<(usize, usize)> = row_wise.storage_order().iter().map(|&(r, c, _)| (r, c)).collect();
        assert_eq!(order, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn round_trip_and_sequential_product() {
        let a = random_matrix(90, 130, 0.04, 21);
        let x = random_vector(130, 22);
        for hilbert in [false, true] {
            let mb = build_mergeb(&a, BlockSize::from_beta(16).unwrap(), hilbert).unwrap();
            assert!(mb.to_triplet().unwrap().same_nonzeros(&a));
            assert_close(&a, &x, &mb.spmv_seq(&x).unwrap(), &a.spmv(&x).unwrap(), 1e-12);
        }
    }
}
