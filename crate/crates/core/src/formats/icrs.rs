//! Incremental (ICRS) and bidirectional incremental (BICRS) row storage.
//!
//! Both formats share one layout and one replay kernel:
//!
//! - `col_inc` has `nnz + 1` entries. `col_inc[0]` is the column of the first
//!   nonzero; `col_inc[k]` for `1 <= k < nnz` is added to the running column
//!   after consuming element `k - 1`; `col_inc[nnz]` is a sentinel that pushes
//!   the running column to `>= n` and ends the last row.
//! - A row change is signalled by the running column reaching `[n, 2n)`; the
//!   stored increment is then `next_col - prev_col + n` and `n` is subtracted.
//! - `row_jump[0]` is the first row; each later entry is added to the running
//!   row on a row change that is followed by more elements.

use super::{check_len, CrsMatrix, TripletMatrix};
use crate::sfc::hilbert_rank;
use crate::{Error, Idx, Result};

/// An increment type the replay kernel can consume.
pub trait Increment: Copy + Send + Sync {
    fn as_i64(self) -> i64;
}

impl Increment for u32 {
    #[inline(always)]
    fn as_i64(self) -> i64 {
        self as i64
    }
}

impl Increment for u64 {
    #[inline(always)]
    fn as_i64(self) -> i64 {
        self as i64
    }
}

impl Increment for i64 {
    #[inline(always)]
    fn as_i64(self) -> i64 {
        self
    }
}

/// Row-major incremental storage with unsigned increments.
#[derive(Debug, Clone, PartialEq)]
pub struct IcrsMatrix {
    m: usize,
    n: usize,
    col_inc: Vec<Idx>,
    row_jump: Vec<Idx>,
    data: Vec<f64>,
}

/// Incremental storage with signed increments, allowing any element order.
#[derive(Debug, Clone, PartialEq)]
pub struct BicrsMatrix {
    m: usize,
    n: usize,
    col_inc: Vec<i64>,
    row_jump: Vec<i64>,
    data: Vec<f64>,
}

/// Element order used when building a [`BicrsMatrix`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementOrder {
    /// Storage order of the source triplet.
    AsGiven,
    RowMajor,
    ColumnMajor,
    /// Hilbert order over the covering power-of-two grid.
    Hilbert,
    /// An explicit permutation of `0..nnz`.
    Custom(Vec<usize>),
}

impl ElementOrder {
    fn permutation(&self, a: &TripletMatrix) -> Result<Vec<usize>> {
        let nnz = a.nnz();
        let mut perm: Vec<usize> = (0..nnz).collect();
        match self {
            ElementOrder::AsGiven => {}
            ElementOrder::RowMajor => perm.sort_unstable_by_key(|&i| (a.row_ind()[i], a.col_ind()[i])),
            ElementOrder::ColumnMajor => perm.sort_unstable_by_key(|&i| (a.col_ind()[i], a.row_ind()[i])),
            ElementOrder::Hilbert => {
                let level = crate::sfc::covering_level(a.m().max(a.n()) as u64);
                if level > 32 {
                    return Err(Error::IndexOverflow(format!("Hilbert level {level} exceeds 32")));
                }
                perm.sort_unstable_by_key(|&i| hilbert_rank(a.row_ind()[i] as u64, a.col_ind()[i] as u64, level))
            }
            ElementOrder::Custom(p) => {
                check_len("permutation", nnz, p.len())?;
                let mut seen = vec![false; nnz];
                for &i in p {
                    if i >= nnz || std::mem::replace(&mut seen[i], true) {
                        return Err(Error::InvalidArgument("order is not a permutation of the nonzeros".into()));
                    }
                }
                perm.clone_from(p);
            }
        }
        Ok(perm)
    }
}

impl IcrsMatrix {
    /// Validating constructor for raw arrays.
    pub fn new(m: usize, n: usize, col_inc: Vec<Idx>, row_jump: Vec<Idx>, data: Vec<f64>) -> Result<Self> {
        if row_jump.iter().skip(1).any(|&j| j == 0) {
            return Err(Error::CorruptFormat("row_jump entries after the first must be >= 1".into()));
        }
        let a = IcrsMatrix {
            m,
            n,
            col_inc,
            row_jump,
            data,
        };
        a.replay(|_, _, _| {})?;
        Ok(a)
    }

    pub fn from_crs(a: &CrsMatrix) -> Result<Self> {
        let n = a.n();
        if n > 0 && 2 * n - 1 > Idx::MAX as usize {
            return Err(Error::IndexOverflow(format!("ICRS increments for n = {n} do not fit the index width")));
        }
        let mut col_inc = Vec::with_capacity(a.nnz() + 1);
        let mut row_jump = Vec::new();
        let mut prev: Option<(usize, usize)> = None;
        for i in 0..a.m() {
            let (cols, _) = a.row(i);
            if cols.is_empty() {
                continue;
            }
            match prev {
                None => row_jump.push(i as Idx),
                Some((pr, _)) => row_jump.push((i - pr) as Idx),
            }
            for (k, &c) in cols.iter().enumerate() {
                let c = c as usize;
                let inc = match prev {
                    None => c,
                    Some((_, pc)) if k == 0 => n - pc + c,
                    Some((_, pc)) => c - pc,
                };
                col_inc.push(inc as Idx);
                prev = Some((i, c));
            }
        }
        col_inc.push(n as Idx);
        Ok(IcrsMatrix {
            m: a.m(),
            n,
            col_inc,
            row_jump,
            data: a.data().to_vec(),
        })
    }

    pub fn from_triplet(a: &TripletMatrix) -> Result<Self> {
        Self::from_crs(&CrsMatrix::from_triplet(a))
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

    pub fn col_inc(&self) -> &[Idx] {
        &self.col_inc
    }

    pub fn row_jump(&self) -> &[Idx] {
        &self.row_jump
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Visits `(row, col, value)` in storage order; returns the number of
    /// times the running column overflowed past `n`.
    pub fn replay<F: FnMut(usize, usize, f64)>(&self, f: F) -> Result<usize> {
        replay(self.m, self.n, &self.col_inc, &self.row_jump, &self.data, f)
    }

    pub fn to_triplet(&self) -> Result<TripletMatrix> {
        to_triplet(self.m, self.n, |f| self.replay(f))
    }
}

impl BicrsMatrix {
    pub fn new(m: usize, n: usize, col_inc: Vec<i64>, row_jump: Vec<i64>, data: Vec<f64>) -> Result<Self> {
        let a = BicrsMatrix {
            m,
            n,
            col_inc,
            row_jump,
            data,
        };
        a.replay(|_, _, _| {})?;
        Ok(a)
    }

    pub fn from_triplet(a: &TripletMatrix, order: &ElementOrder) -> Result<Self> {
        let perm = order.permutation(a)?;
        let n = a.n() as i64;
        let mut col_inc = Vec::with_capacity(a.nnz() + 1);
        let mut row_jump = Vec::new();
        let mut prev: Option<(i64, i64)> = None;
        for &e in &perm {
            let (r, c, _) = a.entry(e);
            let (r, c) = (r as i64, c as i64);
            match prev {
                None => {
                    row_jump.push(r);
                    col_inc.push(c);
                }
                Some((pr, pc)) if pr == r => col_inc.push(c - pc),
                Some((pr, pc)) => {
                    row_jump.push(r - pr);
                    col_inc.push(c - pc + n);
                }
            }
            prev = Some((r, c));
        }
        // Sentinel: lands the running column exactly on n.
        col_inc.push(prev.map_or(n, |(_, pc)| n - pc));
        let data = perm.iter().map(|&e| a.data()[e]).collect();
        Ok(BicrsMatrix {
            m: a.m(),
            n: a.n(),
            col_inc,
            row_jump,
            data,
        })
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

    pub fn col_inc(&self) -> &[i64] {
        &self.col_inc
    }

    pub fn row_jump(&self) -> &[i64] {
        &self.row_jump
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn replay<F: FnMut(usize, usize, f64)>(&self, f: F) -> Result<usize> {
        replay(self.m, self.n, &self.col_inc, &self.row_jump, &self.data, f)
    }

    pub fn to_triplet(&self) -> Result<TripletMatrix> {
        to_triplet(self.m, self.n, |f| self.replay(f))
    }
}

fn to_triplet(
    m: usize,
    n: usize,
    replay: impl FnOnce(&mut dyn FnMut(usize, usize, f64)) -> Result<usize>,
) -> Result<TripletMatrix> {
    let mut entries = Vec::new();
    replay(&mut |r, c, v| entries.push((r, c, v)))?;
    TripletMatrix::from_entries(m, n, entries)
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptFormat(msg.into())
}

/// Shared replay loop; `f` receives each nonzero in storage order.
fn replay<C, R, F>(m: usize, n: usize, col_inc: &[C], row_jump: &[R], data: &[f64], mut f: F) -> Result<usize>
where
    C: Increment,
    R: Increment,
    F: FnMut(usize, usize, f64),
{
    let nnz = data.len();
    check_len("col_inc", nnz + 1, col_inc.len())?;
    if nnz == 0 {
        return if row_jump.is_empty() {
            Ok(0)
        } else {
            Err(corrupt("row_jump must be empty for an empty matrix"))
        };
    }
    let (m, n) = (m as i64, n as i64);
    let in_window = |j: i64| (0..2 * n).contains(&j);
    let mut overflows = 0;
    let mut k = 0;
    let mut r = 1;
    let mut j = col_inc[0].as_i64();
    let mut i = row_jump.first().ok_or_else(|| corrupt("row_jump is empty"))?.as_i64();
    while k < nnz {
        if !(0..m).contains(&i) {
            return Err(corrupt(format!("running row {i} outside [0, {m})")));
        }
        if !in_window(j) {
            return Err(corrupt(format!("running column {j} outside [0, {})", 2 * n)));
        }
        while j < n {
            if k == nnz {
                return Err(corrupt("sentinel increment missing"));
            }
            f(i as usize, j as usize, data[k]);
            k += 1;
            j += col_inc[k].as_i64();
            if !in_window(j) {
                return Err(corrupt(format!("running column {j} outside [0, {})", 2 * n)));
            }
        }
        overflows += 1;
        j -= n;
        if k < nnz {
            let jump = row_jump.get(r).ok_or_else(|| corrupt("row_jump exhausted"))?;
            i += jump.as_i64();
            r += 1;
        }
    }
    if r != row_jump.len() {
        return Err(corrupt(format!("replay consumed {r} row jumps of {}", row_jump.len())));
    }
    Ok(overflows)
}

/// Sequential (B)ICRS multiplication by replaying the increments.
pub fn spmv_bicrs_seq<M: IncrementalMatrix>(a: &M, x: &[f64]) -> Result<Vec<f64>> {
    check_len("x", a.cols(), x.len())?;
    let mut y = vec![0.0; a.rows()];
    a.replay_into(&mut |i, j, v| y[i] += v * x[j])?;
    Ok(y)
}

/// Common surface of [`IcrsMatrix`] and [`BicrsMatrix`].
pub trait IncrementalMatrix {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn replay_into(&self, f: &mut dyn FnMut(usize, usize, f64)) -> Result<usize>;
}

impl IncrementalMatrix for IcrsMatrix {
    fn rows(&self) -> usize {
        self.m
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn replay_into(&self, f: &mut dyn FnMut(usize, usize, f64)) -> Result<usize> {
        self.replay(f)
    }
}

impl IncrementalMatrix for BicrsMatrix {
    fn rows(&self) -> usize {
        self.m
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn replay_into(&self, f: &mut dyn FnMut(usize, usize, f64)) -> Result<usize> {
        self.replay(f)
    }
}
