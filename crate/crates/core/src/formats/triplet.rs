use rayon::prelude::*;

use super::check_len;
use crate::{to_idx, Error, Idx, Result};

/// Coordinate-format sparse matrix: one `(row, col, value)` triple per nonzero.
///
/// This is the ground truth every other format is converted from. Construction
/// validates bounds and rejects duplicate coordinates, so all other builders
/// can assume unique, in-range entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletMatrix {
    m: usize,
    n: usize,
    row_ind: Vec<Idx>,
    col_ind: Vec<Idx>,
    data: Vec<f64>,
}

impl TripletMatrix {
    pub fn new(m: usize, n: usize, row_ind: Vec<Idx>, col_ind: Vec<Idx>, data: Vec<f64>) -> Result<Self> {
        to_idx(m, "row count")?;
        to_idx(n, "column count")?;
        if row_ind.len() != col_ind.len() || row_ind.len() != data.len() {
            return Err(Error::LengthMismatch(format!(
                "row_ind has {}, col_ind has {}, data has {} entries",
                row_ind.len(),
                col_ind.len(),
                data.len()
            )));
        }
        to_idx(data.len(), "nnz")?;
        if let Some(index) = (0..row_ind.len())
            .into_par_iter()
            .find_first(|&i| row_ind[i] as usize >= m || col_ind[i] as usize >= n)
        {
            return Err(Error::IndexOutOfBounds {
                index,
                row: row_ind[index] as usize,
                col: col_ind[index] as usize,
                m,
                n,
            });
        }
        let mut coords: Vec<(Idx, Idx)> = row_ind.iter().copied().zip(col_ind.iter().copied()).collect();
        coords.par_sort_unstable();
        if let Some(w) = coords.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEntry {
                row: w[0].0 as usize,
                col: w[0].1 as usize,
            });
        }
        Ok(TripletMatrix {
            m,
            n,
            row_ind,
            col_ind,
            data,
        })
    }

    pub fn from_entries<I>(m: usize, n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut data = Vec::new();
        for (index, (r, c, v)) in entries.into_iter().enumerate() {
            if r >= m || c >= n {
                return Err(Error::IndexOutOfBounds {
                    index,
                    row: r,
                    col: c,
                    m,
                    n,
                });
            }
            rows.push(r as Idx);
            cols.push(c as Idx);
            data.push(v);
        }
        Self::new(m, n, rows, cols, data)
    }

    pub fn empty(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, Vec::new(), Vec::new(), Vec::new())
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

    pub fn row_ind(&self) -> &[Idx] {
        &self.row_ind
    }

    pub fn col_ind(&self) -> &[Idx] {
        &self.col_ind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Fraction of stored entries, `nnz / (m * n)`; zero for degenerate shapes.
    pub fn density(&self) -> f64 {
        let cells = self.m as f64 * self.n as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.nnz() as f64 / cells
        }
    }

    #[inline]
    pub fn entry(&self, i: usize) -> (usize, usize, f64) {
        (self.row_ind[i] as usize, self.col_ind[i] as usize, self.data[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nnz()).map(move |i| self.entry(i))
    }

    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.m];
        for &r in &self.row_ind {
            counts[r as usize] += 1;
        }
        counts
    }

    /// Entries in row-major order; the canonical form used to compare nonzero sets.
    pub fn sorted_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut entries: Vec<_> = self.iter().collect();
        entries.par_sort_unstable_by_key(|&(r, c, _)| (r, c));
        entries
    }

    /// True when both matrices have the same shape and the same nonzeros with
    /// bitwise-identical values, regardless of storage order.
    pub fn same_nonzeros(&self, other: &TripletMatrix) -> bool {
        if self.m != other.m || self.n != other.n || self.nnz() != other.nnz() {
            return false;
        }
        self.sorted_entries()
            .iter()
            .zip(other.sorted_entries().iter())
            .all(|(a, b)| a.0 == b.0 && a.1 == b.1 && a.2.to_bits() == b.2.to_bits())
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        spmv_triplet(self, x)
    }
}

/// Reference multiplication: accumulates `data[i] * x[col[i]]` into
/// `y[row[i]]` in storage order.
pub fn spmv_triplet(a: &TripletMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_len("x", a.n, x.len())?;
    let mut y = vec![0.0; a.m];
    for ((&r, &c), &v) in a.row_ind.iter().zip(&a.col_ind).zip(&a.data) {
        y[r as usize] += v * x[c as usize];
    }
    Ok(y)
}
