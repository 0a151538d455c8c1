use std::ops::Range;

use super::{check_len, TripletMatrix};
use crate::sort::sort_by_key;
use crate::{to_idx, Error, Idx, Result};

/// Compressed row storage with columns sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CrsMatrix {
    m: usize,
    n: usize,
    row_ptr: Vec<Idx>,
    col_ind: Vec<Idx>,
    data: Vec<f64>,
}

impl CrsMatrix {
    /// Builds from raw arrays, checking every structural invariant.
    pub fn new(m: usize, n: usize, row_ptr: Vec<Idx>, col_ind: Vec<Idx>, data: Vec<f64>) -> Result<Self> {
        check_len("row_ptr", m + 1, row_ptr.len())?;
        if col_ind.len() != data.len() {
            return Err(Error::LengthMismatch(format!(
                "col_ind has {} entries, data has {}",
                col_ind.len(),
                data.len()
            )));
        }
        if row_ptr[0] != 0 || row_ptr[m] as usize != data.len() {
            return Err(Error::CorruptFormat("row_ptr must start at 0 and end at nnz".into()));
        }
        for i in 0..m {
            let (lo, hi) = (row_ptr[i] as usize, row_ptr[i + 1] as usize);
            if lo > hi {
                return Err(Error::CorruptFormat(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_ind[lo..hi];
            if cols.iter().any(|&c| c as usize >= n) {
                return Err(Error::CorruptFormat(format!("column out of range in row {i}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::CorruptFormat(format!("columns not strictly increasing in row {i}")));
            }
        }
        Ok(CrsMatrix {
            m,
            n,
            row_ptr,
            col_ind,
            data,
        })
    }

    /// Sorts the nonzeros row-major, then fills `row_ptr` by counting.
    pub fn from_triplet(a: &TripletMatrix) -> Self {
        let rows = a.row_ind();
        let cols = a.col_ind();
        let order = sort_by_key(a.nnz(), |i| row_major_key(rows[i], cols[i]));

        let mut row_ptr = vec![0 as Idx; a.m() + 1];
        let mut col_ind = Vec::with_capacity(a.nnz());
        let mut data = Vec::with_capacity(a.nnz());
        for &(key, i) in &order {
            let (r, c) = split_row_major_key(key);
            row_ptr[r as usize + 1] += 1;
            col_ind.push(c);
            data.push(a.data()[i]);
        }
        for i in 0..a.m() {
            row_ptr[i + 1] += row_ptr[i];
        }
        CrsMatrix {
            m: a.m(),
            n: a.n(),
            row_ptr,
            col_ind,
            data,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row_ptr(&self) -> &[Idx] {
        &self.row_ptr
    }

    pub fn col_ind(&self) -> &[Idx] {
        &self.col_ind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> (&[Idx], &[f64]) {
        let range = self.row_ptr[i] as usize..self.row_ptr[i + 1] as usize;
        (&self.col_ind[range.clone()], &self.data[range])
    }

    pub fn to_triplet(&self) -> TripletMatrix {
        let mut rows = Vec::with_capacity(self.nnz());
        for i in 0..self.m {
            let count = (self.row_ptr[i + 1] - self.row_ptr[i]) as usize;
            rows.extend(std::iter::repeat_n(i as Idx, count));
        }
        TripletMatrix::new(self.m, self.n, rows, self.col_ind.clone(), self.data.clone())
            .expect("CRS invariants imply a valid triplet matrix")
    }

    /// Row dot products for `rows`, written to `y` (which starts at row `rows.start`).
    #[inline]
    pub(crate) fn multiply_rows(&self, rows: Range<usize>, x: &[f64], y: &mut [f64]) {
        let base = rows.start;
        for i in rows {
            let lo = self.row_ptr[i] as usize;
            let hi = self.row_ptr[i + 1] as usize;
            let mut sum = 0.0;
            for k in lo..hi {
                sum += self.data[k] * x[self.col_ind[k] as usize];
            }
            y[i - base] = sum;
        }
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("x", self.n, x.len())?;
        check_len("y", self.m, y.len())?;
        self.multiply_rows(0..self.m, x, y);
        Ok(())
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.m];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// Index bytes: `row_ptr` plus `col_ind`.
    pub fn index_bytes(&self) -> usize {
        std::mem::size_of::<Idx>() * (self.row_ptr.len() + self.col_ind.len())
    }

    pub(crate) fn check_fits(a: &TripletMatrix) -> Result<()> {
        to_idx(a.nnz(), "nnz").map(|_| ())
    }
}

/// Row-major sort key; a single machine word when indices are 32-bit.
#[cfg(not(feature = "index64"))]
fn row_major_key(r: Idx, c: Idx) -> u64 {
    (r as u64) << 32 | c as u64
}

#[cfg(not(feature = "index64"))]
fn split_row_major_key(key: u64) -> (Idx, Idx) {
    ((key >> 32) as Idx, key as Idx)
}

#[cfg(feature = "index64")]
fn row_major_key(r: Idx, c: Idx) -> (Idx, Idx) {
    (r, c)
}

#[cfg(feature = "index64")]
fn split_row_major_key(key: (Idx, Idx)) -> (Idx, Idx) {
    key
}

/// Sequential CRS multiplication, one row at a time in row order.
pub fn spmv_crs_seq(a: &CrsMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a.spmv(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{dense_oracle, e4, random_matrix};

    #[test]
    fn e4_row_ptr_by_counting() {
        let a = e4();
        // Counting oracle: prefix sums of per-row counts.
        let mut expected = vec![0usize];
        for c in a.row_counts() {
            expected.push(expected.last().unwrap() + c);
        }
        assert_eq!(expected, vec![0, 2, 3, 3, 5]);
        let crs = CrsMatrix::from_triplet(&a);
        let got: Vec<usize> = crs.row_ptr().iter().map(|&v| v as usize).collect();
        assert_eq!(got, expected);
        assert_eq!(crs.spmv(&[1.0; 4]).unwrap(), dense_oracle(&a, &[1.0; 4]));
    }

    #[test]
    fn empty_and_single_row() {
        let crs = CrsMatrix::from_triplet(&TripletMatrix::empty(3, 5).unwrap());
        assert_eq!(crs.row_ptr(), &[0, 0, 0, 0]);
        assert_eq!(crs.spmv(&[1.0; 5]).unwrap(), vec![0.0; 3]);

        let full = TripletMatrix::from_entries(3, 4, (0..4).map(|c| (0, 3 - c, 1.0))).unwrap();
        let crs = CrsMatrix::from_triplet(&full);
        assert_eq!(crs.row_ptr(), &[0, 4, 4, 4]);
        assert_eq!(crs.col_ind(), &[0, 1, 2, 3]);
    }

    #[test]
    fn one_by_one() {
        let a = TripletMatrix::from_entries(1, 1, [(0, 0, 2.0)]).unwrap();
        assert_eq!(spmv_crs_seq(&CrsMatrix::from_triplet(&a), &[3.0]).unwrap(), vec![6.0]);
    }

    #[test]
    fn round_trip_and_validation() {
        let a = random_matrix(40, 30, 0.1, 7);
        let crs = CrsMatrix::from_triplet(&a);
        assert!(crs.to_triplet().same_nonzeros(&a));
        let rebuilt = CrsMatrix::new(
            crs.m(),
            crs.n(),
            crs.row_ptr().to_vec(),
            crs.col_ind().to_vec(),
            crs.data().to_vec(),
        )
        .unwrap();
        assert_eq!(rebuilt, crs);

        let bad = CrsMatrix::new(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]);
        assert!(matches!(bad.unwrap_err(), Error::CorruptFormat(_)));
        let bad = CrsMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0]);
        assert!(matches!(bad.unwrap_err(), Error::DimensionMismatch { .. }));
    }

    #[test]
    fn deterministic_and_rejects_bad_x() {
        let a = CrsMatrix::from_triplet(&random_matrix(50, 50, 0.2, 3));
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let y1 = a.spmv(&x).unwrap();
        let y2 = a.spmv(&x).unwrap();
        assert!(y1.iter().zip(&y2).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(a.spmv(&x[..49]).is_err());
    }
}
