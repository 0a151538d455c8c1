use spmv_core::engine::{Algorithm, BuildConfig, PreparedMatrix};
use spmv_core::formats::{spmv_triplet, TripletMatrix};
use spmv_core::parallel::WorkerPool;

use crate::clock::{min_of_runs, Clock};
use crate::config::BenchConfig;
use crate::report::BenchRecord;
use crate::verify::compare;
use crate::{input_vector, load_matrix, BenchError, NamedMatrix};

/// Shortest duration a record reports, so speedups stay finite.
const MIN_REPORTED_TIME: f64 = 1e-9;

fn build_config(config: &BenchConfig, threads: usize) -> BuildConfig {
    BuildConfig {
        threads,
        l2_bytes: config.l2_bytes,
        block_size: None,
        split_threshold: config.split_threshold,
    }
}

fn pools(threads: &[usize]) -> Result<Vec<WorkerPool>, BenchError> {
    threads.iter().map(|&p| WorkerPool::new(p).map_err(BenchError::from)).collect()
}

fn empty_record(name: &str, a: &TripletMatrix, algorithm: Algorithm, threads: usize) -> BenchRecord {
    BenchRecord {
        matrix: name.to_owned(),
        m: a.m(),
        n: a.n(),
        nnz: a.nnz(),
        algorithm,
        threads,
        min_time: None,
        speedup: None,
        conversion_time: None,
        conversion_ratio: None,
        error: None,
    }
}

/// Warms up, then returns the minimum of `reps` timed multiplications.
/// Only the `multiply_into` call is inside the timed region.
fn time_multiply<C: Clock>(
    clock: &mut C,
    prepared: &PreparedMatrix,
    x: &[f64],
    pool: &WorkerPool,
    warmup: usize,
    reps: usize,
) -> Result<f64, BenchError> {
    let mut y = vec![0.0; prepared.m()];
    for _ in 0..warmup {
        prepared.multiply_into(x, &mut y, pool)?;
    }
    let mut failure = None;
    let t = min_of_runs(clock, reps, || {
        if let Err(e) = prepared.multiply_into(x, &mut y, pool) {
            failure = Some(e);
        }
    });
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(t.max(MIN_REPORTED_TIME)),
    }
}

/// Builds, checks against the triplet kernel, then times one configuration.
fn measure<C: Clock>(
    clock: &mut C,
    a: &TripletMatrix,
    x: &[f64],
    reference: &[f64],
    algorithm: Algorithm,
    pool: &WorkerPool,
    config: &BenchConfig,
) -> Result<f64, BenchError> {
    let prepared = PreparedMatrix::build(a, algorithm, &build_config(config, pool.threads()))?;
    let y = prepared.multiply(x, pool)?;
    if let Some(bad) = compare(a, x, &y, reference).mismatch {
        return Err(BenchError::Config(format!("{algorithm} p={} gives a wrong result: {bad}", pool.threads())));
    }
    time_multiply(clock, &prepared, x, pool, config.warmup, config.spmv_reps)
}

/// Times every configured (algorithm, threads) pair, with speedups relative
/// to sequential CRS measured once. Failures become rows with `error` set.
pub fn bench_spmv_matrix<C: Clock>(
    clock: &mut C,
    matrix: &NamedMatrix,
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    config.validate()?;
    let a = &matrix.matrix;
    let x = input_vector(a.n(), config.seed);
    let reference = spmv_triplet(a, &x)?;
    let pools = pools(&config.threads)?;
    let baseline = measure(clock, a, &x, &reference, Algorithm::Crs, &pools[0], config)?;

    let mut records = Vec::new();
    for &algorithm in &config.algorithms {
        for pool in &pools {
            let mut r = empty_record(&matrix.name, a, algorithm, pool.threads());
            match measure(clock, a, &x, &reference, algorithm, pool, config) {
                Ok(t) => {
                    r.min_time = Some(t);
                    r.speedup = Some(baseline / t);
                }
                Err(e) => r.error = Some(e.to_string()),
            }
            records.push(r);
        }
    }
    records.sort_by_key(|r| (r.algorithm, r.threads));
    Ok(records)
}

pub fn bench_spmv<C: Clock>(clock: &mut C, config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    bench_spmv_matrix(clock, &load_matrix(&config.matrix, config.seed)?, config)
}

/// Times `convert_reps` conversions (after `warmup` untimed ones) from the
/// in-memory triplet for every configured (algorithm, threads) pair. Ratios
/// divide by the fastest ParCRS multiplication over the thread list,
/// measured in the same session.
pub fn bench_convert_matrix<C: Clock>(
    clock: &mut C,
    matrix: &NamedMatrix,
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    config.validate()?;
    let a = &matrix.matrix;
    let x = input_vector(a.n(), config.seed);
    let reference = spmv_triplet(a, &x)?;
    let pools = pools(&config.threads)?;
    let mut best_parcrs = f64::INFINITY;
    for pool in &pools {
        best_parcrs = best_parcrs.min(measure(clock, a, &x, &reference, Algorithm::ParCrs, pool, config)?);
    }

    let mut records = Vec::new();
    for &algorithm in &config.algorithms {
        for &threads in &config.threads {
            let mut r = empty_record(&matrix.name, a, algorithm, threads);
            let cfg = build_config(config, threads);
            let mut failure = None;
            for _ in 0..config.warmup {
                if let Err(e) = PreparedMatrix::build(a, algorithm, &cfg) {
                    failure = Some(e);
                }
            }
            let t = min_of_runs(clock, config.convert_reps, || {
                if let Err(e) = PreparedMatrix::build(a, algorithm, &cfg) {
                    failure = Some(e);
                }
            });
            match failure {
                Some(e) => r.error = Some(e.to_string()),
                None => {
                    let t = t.max(MIN_REPORTED_TIME);
                    r.conversion_time = Some(t);
                    r.conversion_ratio = Some(t / best_parcrs);
                }
            }
            records.push(r);
        }
    }
    records.sort_by_key(|r| (r.algorithm, r.threads));
    Ok(records)
}

pub fn bench_convert<C: Clock>(clock: &mut C, config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    bench_convert_matrix(clock, &load_matrix(&config.matrix, config.seed)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{MonotonicClock, ReplayClock};
    use crate::config::MatrixSource;

    fn small() -> BenchConfig {
        BenchConfig {
            matrix: MatrixSource::Synthetic { m: 300, n: 250, nnz: 3000, skew: 0.5 },
            threads: vec![1, 2],
            spmv_reps: 3,
            convert_reps: 2,
            warmup: 1,
            ..Default::default()
        }
    }

    #[test]
    fn one_rep_smoke() {
        let cfg = BenchConfig { spmv_reps: 1, threads: vec![1], ..small() };
        let records = bench_spmv(&mut MonotonicClock, &cfg).unwrap();
        assert_eq!(records.len(), 11);
        for r in &records {
            assert!(r.error.is_none(), "{r:?}");
            assert!(r.min_time.unwrap() > 0.0);
            assert!(r.speedup.unwrap() >= 0.0);
        }
        let order: Vec<Algorithm> = records.iter().map(|r| r.algorithm).collect();
        assert_eq!(order, Algorithm::ALL.to_vec());
    }

    #[test]
    fn speedup_is_baseline_over_min() {
        // Baseline: warmup is untimed, so each measurement consumes exactly `reps` samples.
        let cfg = BenchConfig { algorithms: vec![Algorithm::Merge, Algorithm::Csb], ..small() };
        let mut clock = ReplayClock::new([4.0, 8.0, 6.0]);
        let records = bench_spmv(&mut clock, &cfg).unwrap();
        assert_eq!(records.len(), 4);
        for r in &records {
            assert_eq!(r.min_time, Some(4.0));
            assert_eq!(r.speedup, Some(1.0));
        }
        let mut clock = ReplayClock::new([2.0, 3.0, 5.0, 1.0, 1.0, 1.0]);
        let cfg = BenchConfig { algorithms: vec![Algorithm::ParCrs], threads: vec![1], ..small() };
        let r = &bench_spmv(&mut clock, &cfg).unwrap()[0];
        assert_eq!((r.min_time, r.speedup), (Some(1.0), Some(2.0)));
    }

    #[test]
    fn conversion_ratio_uses_best_parcrs() {
        let cfg = BenchConfig {
            algorithms: vec![Algorithm::Crs, Algorithm::Bcohch],
            threads: vec![1],
            spmv_reps: 2,
            convert_reps: 2,
            ..small()
        };
        let mut clock = ReplayClock::new([0.5, 0.25, 3.0, 1.0, 2.0, 9.0]);
        let records = bench_convert(&mut clock, &cfg).unwrap();
        assert_eq!(records[0].algorithm, Algorithm::Crs);
        assert_eq!(records[0].conversion_time, Some(1.0));
        assert_eq!(records[0].conversion_ratio, Some(4.0));
        assert_eq!(records[1].conversion_time, Some(2.0));
        assert_eq!(records[1].conversion_ratio, Some(8.0));
        assert!(records.iter().all(|r| r.min_time.is_none()));
    }

    #[test]
    fn single_conversion_is_the_minimum() {
        let cfg = BenchConfig { algorithms: vec![Algorithm::Csbh], threads: vec![1], convert_reps: 1, ..small() };
        let records = bench_convert(&mut MonotonicClock, &cfg).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].conversion_time.unwrap() > 0.0);
    }

    #[test]
    fn build_failures_are_recorded_per_row() {
        // 2^16 columns at a forced small block size exceeds the BCOH block grid limit,
        // but only for the BCOH family.
        let cfg = BenchConfig {
            matrix: MatrixSource::Synthetic { m: 4, n: 1 << 16, nnz: 20, skew: 0.0 },
            algorithms: vec![Algorithm::Crs, Algorithm::Bcoh],
            threads: vec![1],
            l2_bytes: 64,
            ..small()
        };
        let records = bench_spmv(&mut MonotonicClock, &cfg).unwrap();
        assert!(records[0].error.is_none());
        assert!(records[1].error.as_deref().unwrap().contains("block"), "{:?}", records[1].error);
        assert!(records[1].speedup.is_none());
    }
}
