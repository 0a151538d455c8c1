use std::fmt;

use spmv_core::engine::{Algorithm, BuildConfig, PreparedMatrix};
use spmv_core::formats::{spmv_triplet, TripletMatrix};
use spmv_core::parallel::WorkerPool;

use crate::config::BenchConfig;
use crate::{input_vector, load_matrix, BenchError, NamedMatrix};

/// Allowed error per element, relative to `sum_j |a_ij x_j|` of its row.
pub const VERIFY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub row: usize,
    pub got: f64,
    pub expected: f64,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y[{}] = {:e}, expected {:e}", self.row, self.got, self.expected)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Comparison {
    pub max_rel_err: f64,
    /// First row outside the tolerance.
    pub mismatch: Option<Mismatch>,
}

/// Row-scaled comparison of `y` with `reference`. Rows whose scale is zero
/// must match exactly.
pub(crate) fn compare(a: &TripletMatrix, x: &[f64], y: &[f64], reference: &[f64]) -> Comparison {
    let mut scale = vec![0.0f64; a.m()];
    for (r, c, v) in a.iter() {
        scale[r] += (v * x[c]).abs();
    }
    let mut out = Comparison { max_rel_err: 0.0, mismatch: None };
    if y.len() != reference.len() {
        out.max_rel_err = f64::INFINITY;
        out.mismatch = Some(Mismatch { row: y.len().min(reference.len()), got: f64::NAN, expected: f64::NAN });
        return out;
    }
    for (i, (&got, &expected)) in y.iter().zip(reference).enumerate() {
        let diff = (got - expected).abs();
        let rel = if scale[i] > 0.0 {
            diff / scale[i]
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let rel = if rel.is_nan() { f64::INFINITY } else { rel };
        out.max_rel_err = out.max_rel_err.max(rel);
        if rel > VERIFY_RTOL && out.mismatch.is_none() {
            out.mismatch = Some(Mismatch { row: i, got, expected });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyEntry {
    pub algorithm: Algorithm,
    pub threads: usize,
    pub max_rel_err: f64,
    pub mismatch: Option<Mismatch>,
    /// Build or multiplication failure.
    pub error: Option<String>,
}

impl VerifyEntry {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none() && self.error.is_none()
    }
}

impl fmt::Display for VerifyEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8} p={:<3} ", self.algorithm.name(), self.threads)?;
        match (&self.error, &self.mismatch) {
            (Some(e), _) => write!(f, "FAIL error: {e}"),
            (None, Some(m)) => write!(f, "FAIL max_rel_err={:.3e} first bad element {m}", self.max_rel_err),
            (None, None) => write!(f, "ok   max_rel_err={:.3e}", self.max_rel_err),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub matrix: String,
    pub entries: Vec<VerifyEntry>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(VerifyEntry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyEntry> {
        self.entries.iter().filter(|e| !e.passed())
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verify {}", self.matrix)?;
        for e in &self.entries {
            writeln!(f, "  {e}")?;
        }
        let failed = self.failures().count();
        if failed == 0 {
            write!(f, "  all {} checks passed", self.entries.len())
        } else {
            write!(f, "  {failed} of {} checks FAILED", self.entries.len())
        }
    }
}

/// Multiplies with an already built matrix and compares with `reference`.
pub fn verify_prepared(
    prepared: &PreparedMatrix,
    a: &TripletMatrix,
    x: &[f64],
    reference: &[f64],
    pool: &WorkerPool,
) -> VerifyEntry {
    let mut entry = VerifyEntry {
        algorithm: prepared.algorithm(),
        threads: pool.threads(),
        max_rel_err: 0.0,
        mismatch: None,
        error: None,
    };
    // Poison the output so an engine that skips rows cannot pass by accident.
    let mut y = vec![f64::NAN; a.m()];
    match prepared.multiply_into(x, &mut y, pool) {
        Ok(()) => {
            let c = compare(a, x, &y, reference);
            entry.max_rel_err = c.max_rel_err;
            entry.mismatch = c.mismatch;
        }
        Err(e) => entry.error = Some(e.to_string()),
    }
    entry
}

/// Runs every configured engine at every thread count. `inject` sees each
/// built matrix before it is multiplied; pass `|_| ()` outside of tests.
pub fn verify_matrix(
    matrix: &NamedMatrix,
    config: &BenchConfig,
    mut inject: impl FnMut(&mut PreparedMatrix),
) -> Result<VerifyReport, BenchError> {
    config.validate()?;
    let a = &matrix.matrix;
    let x = input_vector(a.n(), config.seed);
    let reference = spmv_triplet(a, &x)?;
    let mut entries = Vec::new();
    for &threads in &config.threads {
        let pool = WorkerPool::new(threads)?;
        let cfg = BuildConfig {
            threads,
            l2_bytes: config.l2_bytes,
            block_size: None,
            split_threshold: config.split_threshold,
        };
        for &algorithm in &config.algorithms {
            match PreparedMatrix::build(a, algorithm, &cfg) {
                Ok(mut prepared) => {
                    inject(&mut prepared);
                    entries.push(verify_prepared(&prepared, a, &x, &reference, &pool));
                }
                Err(e) => entries.push(VerifyEntry {
                    algorithm,
                    threads,
                    max_rel_err: f64::INFINITY,
                    mismatch: None,
                    error: Some(e.to_string()),
                }),
            }
        }
    }
    entries.sort_by_key(|e| (e.algorithm, e.threads));
    Ok(VerifyReport { matrix: matrix.name.clone(), entries })
}

pub fn verify(config: &BenchConfig) -> Result<VerifyReport, BenchError> {
    verify_matrix(&load_matrix(&config.matrix, config.seed)?, config, |_| ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use spmv_core::engine::Storage;

    fn e4() -> NamedMatrix {
        NamedMatrix {
            name: "e4".into(),
            matrix: TripletMatrix::from_entries(4, 4, [(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (3, 0, 4.0), (3, 3, 5.0)])
                .unwrap(),
        }
    }

    fn cfg(threads: Vec<usize>) -> BenchConfig {
        BenchConfig { threads, ..Default::default() }
    }

    #[test]
    fn e4_passes_everywhere() {
        let report = verify_matrix(&e4(), &cfg(vec![1, 2, 4]), |_| ()).unwrap();
        assert_eq!(report.entries.len(), 33);
        assert!(report.passed(), "{report}");
        assert!(report.to_string().contains("all 33 checks passed"));
    }

    #[test]
    fn empty_matrix_passes_with_zero() {
        let m = NamedMatrix { name: "empty".into(), matrix: TripletMatrix::empty(6, 3).unwrap() };
        let report = verify_matrix(&m, &cfg(vec![1, 3]), |_| ()).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.entries.iter().all(|e| e.max_rel_err == 0.0));
    }

    #[test]
    fn corrupted_blk_ptr_is_located() {
        let m = NamedMatrix {
            name: "dense".into(),
            matrix: TripletMatrix::from_entries(8, 8, (0..64).map(|k| (k / 8, k % 8, 1.0 + k as f64))).unwrap(),
        };
        // A tiny L2 budget forces 2x2 blocks.
        let config = BenchConfig { algorithms: vec![Algorithm::Csb, Algorithm::Merge], l2_bytes: 64, ..cfg(vec![2]) };
        let report = verify_matrix(&m, &config, |p| {
            if let Storage::Csb(c) = p.storage_mut() {
                // Move the first block's boundary back by one: its last
                // element is then attributed to the next block's rows/cols.
                let ptr = c.blk_ptr_mut();
                let k = ptr.iter().position(|&v| v > 0).unwrap();
                ptr[k] -= 1;
            }
        })
        .unwrap();
        assert!(!report.passed());
        let bad: Vec<&VerifyEntry> = report.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].algorithm, Algorithm::Csb);
        let text = report.to_string();
        assert!(text.contains("FAIL") && text.contains("y["), "{text}");
    }

    #[test]
    fn scale_zero_rows_must_be_exact() {
        let a = TripletMatrix::from_entries(2, 1, [(0, 0, 1.0)]).unwrap();
        let c = compare(&a, &[0.0], &[0.0, 1e-300], &[0.0, 0.0]);
        assert_eq!(c.mismatch.unwrap().row, 1);
        let c = compare(&a, &[2.0], &[2.0 + 1e-15, 0.0], &[2.0, 0.0]);
        assert!(c.mismatch.is_none() && c.max_rel_err > 0.0);
        let c = compare(&a, &[2.0], &[f64::NAN, 0.0], &[2.0, 0.0]);
        assert_eq!(c.mismatch.unwrap().row, 0);
    }
}
