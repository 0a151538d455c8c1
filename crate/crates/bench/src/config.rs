use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use spmv_core::blocked::DEFAULT_L2_BYTES;
use spmv_core::engine::Algorithm;

use crate::BenchError;

/// Timed multiplications per configuration.
pub const DEFAULT_SPMV_REPS: usize = 550;
/// Timed conversions per format.
pub const DEFAULT_CONVERT_REPS: usize = 25;
/// Untimed runs before the timed ones.
pub const DEFAULT_WARMUP: usize = 5;
pub const DEFAULT_SEED: u64 = 42;

/// Where the matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    /// Matrix Market text, or a binary cache (detected by its magic).
    File(PathBuf),
    /// `generate_synthetic(m, n, nnz, skew, seed)`.
    Synthetic { m: usize, n: usize, nnz: usize, skew: f64 },
}

impl FromStr for MatrixSource {
    type Err = BenchError;

    /// `synthetic:M:N:NNZ[:SKEW]` or a path.
    fn from_str(s: &str) -> Result<Self, BenchError> {
        let Some(spec) = s.strip_prefix("synthetic:") else {
            return Ok(MatrixSource::File(PathBuf::from(s)));
        };
        let parts: Vec<&str> = spec.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(BenchError::Config(format!("expected synthetic:M:N:NNZ[:SKEW], got `{s}`")));
        }
        let int = |p: &str| {
            p.replace('_', "")
                .parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v <= u64::MAX as f64)
                .map(|v| v as usize)
                .ok_or_else(|| BenchError::Config(format!("`{p}` is not a nonnegative integer")))
        };
        let skew = match parts.get(3) {
            Some(p) => p.parse().map_err(|_| BenchError::Config(format!("`{p}` is not a number")))?,
            None => 0.0,
        };
        Ok(MatrixSource::Synthetic { m: int(parts[0])?, n: int(parts[1])?, nnz: int(parts[2])?, skew })
    }
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixSource::File(p) => write!(f, "{}", p.display()),
            MatrixSource::Synthetic { m, n, nnz, skew } => write!(f, "synthetic:{m}:{n}:{nnz}:{skew}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "md" | "markdown" => Ok(OutputFormat::Markdown),
            _ => Err(BenchError::Config(format!("unknown output format `{s}` (csv or md)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub matrix: MatrixSource,
    pub algorithms: Vec<Algorithm>,
    pub threads: Vec<usize>,
    pub spmv_reps: usize,
    pub convert_reps: usize,
    pub warmup: usize,
    pub l2_bytes: usize,
    /// CSB split threshold; `None` keeps the engine default.
    pub split_threshold: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            matrix: MatrixSource::Synthetic { m: 10_000, n: 10_000, nnz: 100_000, skew: 0.0 },
            algorithms: Algorithm::ALL.to_vec(),
            threads: default_threads(),
            spmv_reps: DEFAULT_SPMV_REPS,
            convert_reps: DEFAULT_CONVERT_REPS,
            warmup: DEFAULT_WARMUP,
            l2_bytes: DEFAULT_L2_BYTES,
            split_threshold: None,
            seed: DEFAULT_SEED,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.spmv_reps == 0 || self.convert_reps == 0 {
            return Err(BenchError::Config("repetition counts must be at least 1".into()));
        }
        if self.threads.is_empty() || self.threads.contains(&0) {
            return Err(BenchError::Config("thread list must be nonempty and positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("algorithm list is empty".into()));
        }
        if self.l2_bytes == 0 {
            return Err(BenchError::Config("l2 bytes must be positive".into()));
        }
        Ok(())
    }
}

pub fn available_cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Powers of two up to the core count.
pub fn default_threads() -> Vec<usize> {
    let cores = available_cores();
    std::iter::successors(Some(1usize), |&p| Some(p * 2)).take_while(|&p| p <= cores).collect()
}

/// Comma-separated algorithm names, or `all`.
pub fn parse_algorithms(s: &str) -> Result<Vec<Algorithm>, BenchError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Algorithm::ALL.to_vec());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<Algorithm>().map_err(BenchError::from))
        .collect()
}

pub fn parse_threads(s: &str) -> Result<Vec<usize>, BenchError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| BenchError::Config(format!("`{p}` is not a thread count"))))
        .collect()
}
