//! Parallel multiplication engines.
//!
//! Every engine runs on a [`WorkerPool`] of `p` threads and writes each output
//! element from exactly one worker, except where a row (or block row) is split
//! between workers; those partial sums travel through private temporaries and
//! are combined afterwards in a fixed order.

mod bcoh;
mod csb;
mod merge;
mod parcrs;

pub use bcoh::{spmv_bcoh, spmv_bcoh_into};
pub use csb::{spmv_csb, spmv_csb_into, spmv_csb_with_threshold};
pub use merge::{
    diagonal_search, merge_partition, spmv_merge, spmv_merge_into, spmv_merge_traced, spmv_mergeb, spmv_mergeb_into,
    spmv_mergeb_traced, CarryOut, MergePathPoint,
};
pub use parcrs::{spmv_parcrs, spmv_parcrs_into, spmv_parcrs_traced, PARCRS_CHUNK_ROWS};

use crate::{Error, Result};

/// A fixed-size pool of worker threads.
pub struct WorkerPool {
    pool: rayon::ThreadPool,
}

impl WorkerPool {
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::InvalidArgument("thread count must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("spmv-worker-{i}"))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {threads} workers: {e}")))?;
        Ok(WorkerPool { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub(crate) fn rayon(&self) -> &rayon::ThreadPool {
        &self.pool
    }
}

impl std::fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool").field("threads", &self.threads()).finish()
    }
}

/// Splits `y` into consecutive slices at the given nondecreasing cut points
/// (`cuts[0] == 0`, `cuts.last() == y.len()`).
pub(crate) fn split_at_cuts<'a>(mut y: &'a mut [f64], cuts: &[usize]) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(cuts.len().saturating_sub(1));
    for w in cuts.windows(2) {
        let (head, tail) = std::mem::take(&mut y).split_at_mut(w[1] - w[0]);
        out.push(head);
        y = tail;
    }
    out
}
