use rayon::prelude::*;

use super::{sort_block_row_major, BlockSize, Grid, PackedIndex, CSB_INDEX_BITS};
use crate::formats::{check_len, TripletMatrix};
use crate::sfc::{curve_rank, CurveKind};
use crate::{to_idx, Idx, Result};

/// Compressed sparse blocks: a dense grid of sparse `beta x beta` blocks.
///
/// `blk_ptr` has one entry per block cell in block-row-major order plus a
/// terminator; inside each block the packed coordinates follow `curve`
/// (Z-Morton for CSB, Hilbert for CSBH).
#[derive(Debug, Clone, PartialEq)]
pub struct CsbMatrix {
    m: usize,
    n: usize,
    grid: Grid,
    curve: CurveKind,
    blk_ptr: Vec<Idx>,
    packed: Vec<PackedIndex>,
    data: Vec<f64>,
}

pub fn build_csb(a: &TripletMatrix, beta: BlockSize, curve: CurveKind) -> Result<CsbMatrix> {
    beta.check_cap(CSB_INDEX_BITS)?;
    let grid = Grid::new(a.m(), a.n(), beta);
    grid.check_key_width()?;
    let cells = grid.block_rows * grid.block_cols;
    to_idx(a.nnz(), "nnz")?;
    let b = beta.log2();

    let order = sort_block_row_major(a, &grid, |r, c| curve_rank(curve, r, c, b));

    let mut blk_ptr = vec![0 as Idx; cells + 1];
    for &(key, _) in &order {
        blk_ptr[(key >> (2 * b)) as usize + 1] += 1;
    }
    for i in 0..cells {
        blk_ptr[i + 1] += blk_ptr[i];
    }
    let mask = beta.beta() - 1;
    let (packed, data): (Vec<PackedIndex>, Vec<f64>) = order
        .par_iter()
        .map(|&(_, i)| {
            let (r, c, v) = a.entry(i);
            (PackedIndex::pack_unchecked(r & mask, c & mask), v)
        })
        .unzip();
    Ok(CsbMatrix {
        m: a.m(),
        n: a.n(),
        grid,
        curve,
        blk_ptr,
        packed,
        data,
    })
}

impl CsbMatrix {
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

    pub fn curve(&self) -> CurveKind {
        self.curve
    }

    pub fn block_rows(&self) -> usize {
        self.grid.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.grid.block_cols
    }

    pub fn blk_ptr(&self) -> &[Idx] {
        &self.blk_ptr
    }

    pub fn packed(&self) -> &[PackedIndex] {
        &self.packed
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access for fault-injection tests.
    #[doc(hidden)]
    pub fn blk_ptr_mut(&mut self) -> &mut [Idx] {
        &mut self.blk_ptr
    }

    /// Element range of block `(br, bc)`.
    #[inline]
    pub fn block_range(&self, br: usize, bc: usize) -> std::ops::Range<usize> {
        let cell = br * self.grid.block_cols + bc;
        self.blk_ptr[cell] as usize..self.blk_ptr[cell + 1] as usize
    }

    /// Nonzeros in block row `br`.
    pub fn block_row_nnz(&self, br: usize) -> usize {
        let first = br * self.grid.block_cols;
        (self.blk_ptr[first + self.grid.block_cols] - self.blk_ptr[first]) as usize
    }

    /// Entries in storage order: block-row-major over cells, curve order inside.
    pub fn storage_order(&self) -> Vec<(usize, usize, f64)> {
        let beta = self.grid.beta.beta();
        let mut out = Vec::with_capacity(self.nnz());
        for br in 0..self.grid.block_rows {
            for bc in 0..self.grid.block_cols {
                for k in self.block_range(br, bc) {
                    let (r, c) = self.packed[k].unpack();
                    out.push((br * beta + r as usize, bc * beta + c as usize, self.data[k]));
                }
            }
        }
        out
    }

    pub fn to_triplet(&self) -> Result<TripletMatrix> {
        TripletMatrix::from_entries(self.m, self.n, self.storage_order())
    }

    /// Index bytes: 4 per packed coordinate plus the block pointers.
    pub fn index_bytes(&self) -> usize {
        4 * self.packed.len() + std::mem::size_of::<Idx>() * self.blk_ptr.len()
    }

    /// Sequential block-by-block multiplication.
    pub fn spmv_seq(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("x", self.n, x.len())?;
        let beta = self.grid.beta.beta();
        let mut y = vec![0.0; self.m];
        for (br, y_row) in y.chunks_mut(beta).enumerate() {
            for bc in 0..self.grid.block_cols {
                let range = self.block_range(br, bc);
                multiply_packed(&self.packed[range.clone()], &self.data[range], &x[bc * beta..], y_row);
            }
        }
        Ok(y)
    }
}

/// `y[r] += v * x[c]` for every packed `(r, c)` of one block.
#[inline]
pub(crate) fn multiply_packed(packed: &[PackedIndex], data: &[f64], x: &[f64], y: &mut [f64]) {
    for (p, &v) in packed.iter().zip(data) {
        let (r, c) = p.unpack();
        y[r as usize] += v * x[c as usize];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocked::select_block_size;
    use crate::testutil::{dense_oracle, e4, random_matrix, random_vector, assert_close};
    use crate::Error;

    fn beta(b: usize) -> BlockSize {
        BlockSize::from_beta(b).unwrap()
    }

    #[test]
    fn e4_block_pointers() {
        let a = e4();
        // Counting oracle: nonzeros per 2x2 block, block-row-major.
        let mut counts = [0usize; 4];
        for (r, c, _) in a.iter() {
            counts[(r / 2) * 2 + c / 2] += 1;
        }
        let mut expected = vec![0];
        for c in counts {
            expected.push(expected.last().unwrap() + c);
        }
        assert_eq!(expected, vec![0, 2, 3, 4, 5]);
        let csb = build_csb(&a, beta(2), CurveKind::ZMorton).unwrap();
        let got: Vec<usize> = csb.blk_ptr().iter().map(|&v| v as usize).collect();
        assert_eq!(got, expected);
        assert_eq!(csb.spmv_seq(&[1.0; 4]).unwrap(), dense_oracle(&a, &[1.0; 4]));
    }

    #[test]
    fn single_block_is_pure_curve_order() {
        let a = random_matrix(12, 9, 0.4, 1);
        for curve in [CurveKind::ZMorton, CurveKind::Hilbert] {
            let csb = build_csb(&a, beta(16), curve).unwrap();
            assert_eq!(csb.block_rows() * csb.block_cols(), 1);
            let ranks: Vec<u64> = csb
                .storage_order()
                .iter()
                .map(|&(r, c, _)| curve_rank(curve, r as u64, c as u64, 4))
                .collect();
            assert!(ranks.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn dense_hilbert_block_order() {
        let a = TripletMatrix::from_entries(4, 4, (0..16).map(|i| (i / 4, i % 4, i as f64))).unwrap();
        let csb = build_csb(&a, beta(2), CurveKind::Hilbert).unwrap();
        let first: Vec<(usize, usize)> = csb.storage_order()[..4].iter().map(|&(r, c, _)| (r, c)).collect();
        assert_eq!(first, vec![(0, 0), (1, 0), (1, 1), (0, 1)]);
    }

    #[test]
    fn round_trip_and_accounting() {
        let a = random_matrix(100, 70, 0.05, 4);
        let b = select_block_size(70, 16, 1 << 19, 8);
        let csb = build_csb(&a, b, CurveKind::ZMorton).unwrap();
        assert!(csb.to_triplet().unwrap().same_nonzeros(&a));
        let cells = csb.block_rows() * csb.block_cols();
        assert_eq!(csb.index_bytes(), 4 * a.nnz() + std::mem::size_of::<Idx>() * (cells + 1));
        let x = random_vector(70, 5);
        assert_close(&a, &x, &csb.spmv_seq(&x).unwrap(), &a.spmv(&x).unwrap(), 1e-12);
    }

    #[test]
    fn empty_matrix() {
        let csb = build_csb(&TripletMatrix::empty(5, 3).unwrap(), beta(2), CurveKind::Hilbert).unwrap();
        assert!(csb.blk_ptr().iter().all(|&p| p == 0));
        assert_eq!(csb.spmv_seq(&[1.0; 3]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn rejects_oversized_key() {
        let a = TripletMatrix::empty(u32::MAX as usize, u32::MAX as usize).unwrap();
        assert!(matches!(build_csb(&a, beta(2), CurveKind::ZMorton), Err(Error::IndexOverflow(_))));
    }
}
