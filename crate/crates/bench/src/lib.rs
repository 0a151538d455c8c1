//! Measurement harness for the `spmv-core` engines: minimum-of-runs SpMV
//! timing, conversion timing normalised to ParCRS multiplications,
//! verification against the triplet kernel, and CSV/markdown reports.

pub mod clock;
pub mod config;
pub mod report;
pub mod run;
pub mod verify;

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spmv_core::formats::TripletMatrix;
use spmv_core::io::{cache_read_file, generate_synthetic, read_matrix_market_file, ReadError, CACHE_MAGIC};

pub use clock::{min_of_runs, Clock, MonotonicClock, ReplayClock};
pub use config::{BenchConfig, MatrixSource, OutputFormat};
pub use report::{density_class, emit_report, parse_csv, BenchRecord, DensityClass};
pub use run::{bench_convert, bench_convert_matrix, bench_spmv, bench_spmv_matrix};
pub use verify::{verify, verify_matrix, verify_prepared, VerifyEntry, VerifyReport, VERIFY_RTOL};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error(transparent)]
    Core(#[from] spmv_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A loaded matrix with the name reports use for it.
#[derive(Debug, Clone)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: TripletMatrix,
}

pub fn load_matrix(source: &MatrixSource, seed: u64) -> Result<NamedMatrix, BenchError> {
    match source {
        MatrixSource::Synthetic { m, n, nnz, skew } => Ok(NamedMatrix {
            name: format!("synthetic-{m}x{n}-{nnz}-s{skew}-seed{seed}"),
            matrix: generate_synthetic(*m, *n, *nnz, *skew, seed)?,
        }),
        MatrixSource::File(path) => Ok(NamedMatrix {
            name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "matrix".into()),
            matrix: read_any(path)?,
        }),
    }
}

fn read_any(path: &Path) -> Result<TripletMatrix, BenchError> {
    let mut head = [0u8; 7];
    let got = BufReader::new(File::open(path)?).read(&mut head)?;
    if got == head.len() && head[..] == CACHE_MAGIC[..7] {
        Ok(cache_read_file(path)?)
    } else {
        Ok(read_matrix_market_file(path)?)
    }
}

/// The input vector: uniform in `[-1, 1)`, seeded.
pub fn input_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
