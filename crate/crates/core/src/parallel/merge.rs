use rayon::prelude::*;

use super::{split_at_cuts, WorkerPool};
use crate::blocked::MergeBlockMatrix;
use crate::formats::{check_len, CrsMatrix};
use crate::Result;

/// A point on the merge path: `i` items consumed from list A, `j` from list B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MergePathPoint {
    pub i: usize,
    pub j: usize,
}

impl MergePathPoint {
    pub fn diagonal(self) -> usize {
        self.i + self.j
    }
}

/// The unfinished row (or block row) a worker hands to the combine step.
#[derive(Debug, Clone, PartialEq)]
pub struct CarryOut<V> {
    pub row: usize,
    pub value: V,
}

/// Binary search along anti-diagonal `diag` for the point where the merge of
/// `len_a` and `len_b` items crosses it. `a_le_b(i, j)` is `A[i] <= B[j]`;
/// ties consume from A first.
fn search_by(len_a: usize, len_b: usize, diag: usize, a_le_b: impl Fn(usize, usize) -> bool) -> MergePathPoint {
    let mut lo = diag.saturating_sub(len_b);
    let mut hi = diag.min(len_a);
    while lo < hi {
        let pivot = lo + (hi - lo) / 2;
        if a_le_b(pivot, diag - pivot - 1) {
            lo = pivot + 1;
        } else {
            hi = pivot;
        }
    }
    MergePathPoint { i: lo, j: diag - lo }
}

/// Merge-path point on diagonal `diag` of two nondecreasing lists.
pub fn diagonal_search<T: PartialOrd>(a: &[T], b: &[T], diag: usize) -> MergePathPoint {
    assert!(diag <= a.len() + b.len(), "diagonal {diag} beyond {} items", a.len() + b.len());
    search_by(a.len(), b.len(), diag, |i, j| a[i] <= b[j])
}

/// Start points of `p` workers over the merge of `ends` (row end offsets)
/// with the naturals `0..items`, plus the end point. Worker `t` starts on
/// diagonal `floor(t * total / p)`, so shares differ by at most one item.
pub fn merge_partition(ends: &[usize], items: usize, p: usize) -> Vec<MergePathPoint> {
    assert!(p >= 1);
    let total = ends.len() + items;
    (0..=p)
        .map(|t| {
            let diag = (t as u128 * total as u128 / p as u128) as usize;
            search_by(ends.len(), items, diag, |i, j| ends[i] <= j)
        })
        .collect()
}

/// Merge-path CRS: every worker consumes an equal share of rows-plus-nonzeros.
pub fn spmv_merge(a: &CrsMatrix, x: &[f64], pool: &WorkerPool) -> Result<Vec<f64>> {
    spmv_merge_traced(a, x, pool).map(|(y, _)| y)
}

/// Like [`spmv_merge`] but also returns the items each worker consumed.
pub fn spmv_merge_traced(a: &CrsMatrix, x: &[f64], pool: &WorkerPool) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut y = vec![0.0; a.m()];
    let counts = merge_into(a, x, &mut y, pool)?;
    Ok((y, counts))
}

/// [`spmv_merge`] into a caller-provided output.
pub fn spmv_merge_into(a: &CrsMatrix, x: &[f64], y: &mut [f64], pool: &WorkerPool) -> Result<()> {
    merge_into(a, x, y, pool).map(|_| ())
}

fn merge_into(a: &CrsMatrix, x: &[f64], y: &mut [f64], pool: &WorkerPool) -> Result<Vec<usize>> {
    check_len("x", a.n(), x.len())?;
    check_len("y", a.m(), y.len())?;
    let (m, p) = (a.m(), pool.threads());
    let ends: Vec<usize> = a.row_ptr()[1..].iter().map(|&v| v as usize).collect();
    let points = merge_partition(&ends, a.nnz(), p);
    let (col_ind, data) = (a.col_ind(), a.data());

    let cuts: Vec<usize> = points.iter().map(|pt| pt.i).collect();
    let slices = split_at_cuts(&mut *y, &cuts);
    let results: Vec<(CarryOut<f64>, usize)> = pool.rayon().install(|| {
        slices
            .into_par_iter()
            .with_max_len(1)
            .enumerate()
            .map(|(t, y_part)| {
                let (start, end) = (points[t], points[t + 1]);
                let (mut i, mut j) = (start.i, start.j);
                let mut temp = 0.0;
                while i < end.i {
                    while j < ends[i] {
                        temp += data[j] * x[col_ind[j] as usize];
                        j += 1;
                    }
                    y_part[i - start.i] = temp;
                    temp = 0.0;
                    i += 1;
                }
                while j < end.j {
                    temp += data[j] * x[col_ind[j] as usize];
                    j += 1;
                }
                let consumed = end.diagonal() - start.diagonal();
                (CarryOut { row: end.i, value: temp }, consumed)
            })
            .collect()
    });
    for (carry, _) in &results {
        if carry.row < m {
            y[carry.row] += carry.value;
        }
    }
    Ok(results.into_iter().map(|(_, c)| c).collect())
}

/// Merge path over the block rows of a [`MergeBlockMatrix`]: consuming a
/// block multiplies it into a private window of `beta` rows; consuming a
/// block-row end writes that window to `y`.
pub fn spmv_mergeb(a: &MergeBlockMatrix, x: &[f64], pool: &WorkerPool) -> Result<Vec<f64>> {
    spmv_mergeb_traced(a, x, pool).map(|(y, _)| y)
}

/// Like [`spmv_mergeb`] but also returns the items each worker consumed.
pub fn spmv_mergeb_traced(a: &MergeBlockMatrix, x: &[f64], pool: &WorkerPool) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut y = vec![0.0; a.m()];
    let counts = mergeb_into(a, x, &mut y, pool)?;
    Ok((y, counts))
}

/// [`spmv_mergeb`] into a caller-provided output.
pub fn spmv_mergeb_into(a: &MergeBlockMatrix, x: &[f64], y: &mut [f64], pool: &WorkerPool) -> Result<()> {
    mergeb_into(a, x, y, pool).map(|_| ())
}

fn mergeb_into(a: &MergeBlockMatrix, x: &[f64], y: &mut [f64], pool: &WorkerPool) -> Result<Vec<usize>> {
    check_len("x", a.n(), x.len())?;
    check_len("y", a.m(), y.len())?;
    let (m, p) = (a.m(), pool.threads());
    let beta = a.beta().beta();
    let block_rows = a.block_rows();
    let ends: Vec<usize> = a.blk_row_ptr()[1..].iter().map(|&v| v as usize).collect();
    let points = merge_partition(&ends, a.block_count(), p);

    let cuts: Vec<usize> = points.iter().map(|pt| (pt.i * beta).min(m)).collect();
    let slices = split_at_cuts(&mut *y, &cuts);
    let results: Vec<(CarryOut<Vec<f64>>, usize)> = pool.rayon().install(|| {
        slices
            .into_par_iter()
            .with_max_len(1)
            .enumerate()
            .map(|(t, y_part)| {
                let (start, end) = (points[t], points[t + 1]);
                let (mut i, mut j) = (start.i, start.j);
                let mut temp = vec![0.0; beta];
                while i < end.i {
                    while j < ends[i] {
                        a.multiply_block(j, x, &mut temp);
                        j += 1;
                    }
                    let lo = (i - start.i) * beta;
                    let rows = beta.min(m - i * beta);
                    y_part[lo..lo + rows].copy_from_slice(&temp[..rows]);
                    temp.fill(0.0);
                    i += 1;
                }
                while j < end.j {
                    a.multiply_block(j, x, &mut temp);
                    j += 1;
                }
                let consumed = end.diagonal() - start.diagonal();
                (CarryOut { row: end.i, value: temp }, consumed)
            })
            .collect()
    });
    for (carry, _) in &results {
        if carry.row < block_rows {
            let lo = carry.row * beta;
            for (yi, v) in y[lo..(lo + beta).min(m)].iter_mut().zip(&carry.value) {
                *yi += v;
            }
        }
    }
    Ok(results.into_iter().map(|(_, c)| c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocked::{build_mergeb, BlockSize};
    use crate::formats::{spmv_crs_seq, TripletMatrix};
    use crate::testutil::{assert_close, dense_oracle, e4, random_matrix, random_vector};
    use proptest::prelude::*;

    #[test]
    fn figure_path() {
        let a = [1, 2, 3, 4, 5, 6, 7, 8];
        let b = [3, 3, 5, 9];
        let path = [
            (0, 0), (1, 0), (2, 0), (3, 0), (3, 1), (3, 2), (4, 2),
            (5, 2), (5, 3), (6, 3), (7, 3), (8, 3), (8, 4),
        ];
        for (diag, &(i, j)) in path.iter().enumerate() {
            assert_eq!(diagonal_search(&a, &b, diag), MergePathPoint { i, j }, "diagonal {diag}");
        }
    }

    /// Sequential two-finger merge; ties take from A.
    fn merge_oracle(a: &[u32], b: &[u32]) -> Vec<MergePathPoint> {
        let (mut i, mut j) = (0, 0);
        let mut out = vec![MergePathPoint { i, j }];
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i] <= b[j]) {
                i += 1;
            } else {
                j += 1;
            }
            out.push(MergePathPoint { i, j });
        }
        out
    }

    proptest! {
        #[test]
        fn search_matches_sequential_merge(
            mut a in prop::collection::vec(0u32..30, 0..20),
            mut b in prop::collection::vec(0u32..30, 0..20),
        ) {
            a.sort_unstable();
            b.sort_unstable();
            for (diag, point) in merge_oracle(&a, &b).into_iter().enumerate() {
                prop_assert_eq!(diagonal_search(&a, &b, diag), point);
            }
        }

        #[test]
        fn shares_differ_by_at_most_one(m in 1usize..200, n in 1usize..200, seed in 0u64..500, p in 1usize..9) {
            let a = CrsMatrix::from_triplet(&random_matrix(m, n, 0.05, seed));
            let x = random_vector(n, seed);
            let pool = WorkerPool::new(p).unwrap();
            let (y, counts) = spmv_merge_traced(&a, &x, &pool).unwrap();
            prop_assert_eq!(counts.iter().sum::<usize>(), m + a.nnz());
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            assert_close(&a.to_triplet(), &x, &y, &spmv_crs_seq(&a, &x).unwrap(), 1e-12);
        }
    }

    #[test]
    fn e4_three_workers() {
        let a = CrsMatrix::from_triplet(&e4());
        let pool = WorkerPool::new(3).unwrap();
        let (y, counts) = spmv_merge_traced(&a, &[1.0; 4], &pool).unwrap();
        assert_eq!(counts, vec![3, 3, 3]);
        assert_eq!(y, dense_oracle(&e4(), &[1.0; 4]));
    }

    #[test]
    fn single_worker_is_bitwise_sequential() {
        let a = CrsMatrix::from_triplet(&random_matrix(400, 500, 0.02, 9));
        let x = random_vector(500, 10);
        let pool = WorkerPool::new(1).unwrap();
        assert_eq!(spmv_merge(&a, &x, &pool).unwrap(), spmv_crs_seq(&a, &x).unwrap());
    }

    #[test]
    fn almost_dense_row_is_shared() {
        let n = 2000;
        let mut entries: Vec<(usize, usize, f64)> = (0..n).map(|c| (3, c, 1.0 + c as f64)).collect();
        entries.extend((0..50).filter(|&r| r != 3).map(|r| (r, r, 2.0)));
        let t = TripletMatrix::from_entries(50, n, entries).unwrap();
        let a = CrsMatrix::from_triplet(&t);
        let x = random_vector(n, 11);
        let pool = WorkerPool::new(4).unwrap();
        let (y, counts) = spmv_merge_traced(&a, &x, &pool).unwrap();
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        assert_close(&t, &x, &y, &t.spmv(&x).unwrap(), 1e-12);
    }

    #[test]
    fn empty_rows_and_matrix() {
        let pool = WorkerPool::new(3).unwrap();
        let t = TripletMatrix::empty(5, 4).unwrap();
        assert_eq!(spmv_merge(&CrsMatrix::from_triplet(&t), &[1.0; 4], &pool).unwrap(), vec![0.0; 5]);
        let mb = build_mergeb(&t, BlockSize::from_beta(2).unwrap(), false).unwrap();
        assert_eq!(spmv_mergeb(&mb, &[1.0; 4], &pool).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn mergeb_e4_and_sequential() {
        let mb = build_mergeb(&e4(), BlockSize::from_beta(2).unwrap(), false).unwrap();
        let pool = WorkerPool::new(2).unwrap();
        assert_eq!(spmv_mergeb(&mb, &[1.0; 4], &pool).unwrap(), vec![3.0, 3.0, 0.0, 9.0]);

        let t = random_matrix(333, 250, 0.03, 12);
        let x = random_vector(250, 13);
        for hilbert in [false, true] {
            let mb = build_mergeb(&t, BlockSize::from_beta(32).unwrap(), hilbert).unwrap();
            let one = WorkerPool::new(1).unwrap();
            assert_eq!(spmv_mergeb(&mb, &x, &one).unwrap(), mb.spmv_seq(&x).unwrap());
            for p in [2, 3, 7] {
                let pool = WorkerPool::new(p).unwrap();
                let (y, counts) = spmv_mergeb_traced(&mb, &x, &pool).unwrap();
                assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
                assert_close(&t, &x, &y, &t.spmv(&x).unwrap(), 1e-12);
            }
        }
    }

    #[test]
    fn mergeb_more_workers_than_blocks() {
        let t = TripletMatrix::from_entries(40, 40, [(0, 0, 1.0), (39, 39, 2.0), (20, 5, 3.0)]).unwrap();
        let mb = build_mergeb(&t, BlockSize::from_beta(16).unwrap(), true).unwrap();
        let x = random_vector(40, 14);
        let pool = WorkerPool::new(8).unwrap();
        assert_close(&t, &x, &spmv_mergeb(&mb, &x, &pool).unwrap(), &dense_oracle(&t, &x), 1e-12);
    }
}
