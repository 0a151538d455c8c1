use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::WorkerPool;
use crate::formats::{check_len, CrsMatrix};
use crate::Result;

/// Rows claimed per step of the dynamic schedule.
pub const PARCRS_CHUNK_ROWS: usize = 512;

/// Row-parallel CRS with dynamic scheduling: workers repeatedly claim the
/// next chunk of [`PARCRS_CHUNK_ROWS`] rows from a shared counter.
pub fn spmv_parcrs(a: &CrsMatrix, x: &[f64], pool: &WorkerPool) -> Result<Vec<f64>> {
    let mut y = vec![0.0; a.m()];
    spmv_parcrs_into(a, x, &mut y, pool)?;
    Ok(y)
}

/// [`spmv_parcrs`] into a caller-provided output.
pub fn spmv_parcrs_into(a: &CrsMatrix, x: &[f64], y: &mut [f64], pool: &WorkerPool) -> Result<()> {
    run(a, x, y, pool, PARCRS_CHUNK_ROWS, None)
}

/// Like [`spmv_parcrs`] but also returns, per chunk, the index of the worker
/// that claimed it.
pub fn spmv_parcrs_traced(a: &CrsMatrix, x: &[f64], pool: &WorkerPool, chunk_rows: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    let chunks = a.m().div_ceil(chunk_rows.max(1));
    let owners: Vec<AtomicUsize> = (0..chunks).map(|_| AtomicUsize::new(usize::MAX)).collect();
    let mut y = vec![0.0; a.m()];
    run(a, x, &mut y, pool, chunk_rows, Some(&owners))?;
    Ok((y, owners.into_iter().map(AtomicUsize::into_inner).collect()))
}

fn run(
    a: &CrsMatrix,
    x: &[f64],
    y: &mut [f64],
    pool: &WorkerPool,
    chunk_rows: usize,
    owners: Option<&[AtomicUsize]>,
) -> Result<()> {
    check_len("x", a.n(), x.len())?;
    check_len("y", a.m(), y.len())?;
    let chunk_rows = chunk_rows.max(1);
    let slots: Vec<Mutex<&mut [f64]>> = y.chunks_mut(chunk_rows).map(Mutex::new).collect();
    let next = AtomicUsize::new(0);
    pool.rayon().broadcast(|ctx| loop {
        let c = next.fetch_add(1, Ordering::Relaxed);
        if c >= slots.len() {
            break;
        }
        if let Some(owners) = owners {
            let previous = owners[c].swap(ctx.index(), Ordering::Relaxed);
            assert_eq!(previous, usize::MAX, "chunk {c} claimed twice");
        }
        let start = c * chunk_rows;
        // Each chunk is claimed once, so the lock is never contended.
        let mut slot = slots[c].lock().unwrap();
        a.multiply_rows(start..start + slot.len(), x, &mut slot);
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::spmv_crs_seq;
    use crate::testutil::{e4, random_matrix, random_vector};

    #[test]
    fn single_worker_is_bitwise_sequential() {
        let a = CrsMatrix::from_triplet(&random_matrix(1500, 300, 0.02, 3));
        let x = random_vector(300, 4);
        let pool = WorkerPool::new(1).unwrap();
        assert_eq!(spmv_parcrs(&a, &x, &pool).unwrap(), spmv_crs_seq(&a, &x).unwrap());
    }

    #[test]
    fn e4_four_workers() {
        let a = CrsMatrix::from_triplet(&e4());
        let pool = WorkerPool::new(4).unwrap();
        assert_eq!(spmv_parcrs(&a, &[1.0; 4], &pool).unwrap(), vec![3.0, 3.0, 0.0, 9.0]);
    }

    #[test]
    fn fewer_chunks_than_workers() {
        let t = random_matrix(300, 300, 0.03, 5);
        let a = CrsMatrix::from_triplet(&t);
        let x = random_vector(300, 6);
        let pool = WorkerPool::new(8).unwrap();
        let (y, owners) = spmv_parcrs_traced(&a, &x, &pool, PARCRS_CHUNK_ROWS).unwrap();
        assert_eq!(owners.len(), 1);
        assert_eq!(y, spmv_crs_seq(&a, &x).unwrap());
    }

    #[test]
    fn every_chunk_claimed_by_exactly_one_worker() {
        let a = CrsMatrix::from_triplet(&random_matrix(2000, 50, 0.05, 7));
        let x = random_vector(50, 8);
        let pool = WorkerPool::new(4).unwrap();
        let (y, owners) = spmv_parcrs_traced(&a, &x, &pool, 16).unwrap();
        assert_eq!(owners.len(), 125);
        assert!(owners.iter().all(|&w| w < 4));
        // Each row is summed by one worker in sequential order: exact equality.
        assert_eq!(y, spmv_crs_seq(&a, &x).unwrap());
    }

    #[test]
    fn rejects_wrong_x() {
        let a = CrsMatrix::from_triplet(&e4());
        assert!(spmv_parcrs(&a, &[1.0; 3], &WorkerPool::new(2).unwrap()).is_err());
    }
}
