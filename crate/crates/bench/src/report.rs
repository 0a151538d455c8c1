use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use spmv_core::engine::Algorithm;

use crate::config::OutputFormat;
use crate::BenchError;

/// Matrices sparser than this form their own report class.
pub const DENSITY_THRESHOLD: f64 = 1e-6;

/// One measured (matrix, algorithm, threads) configuration.
///
/// SpMV rows fill `min_time` and `speedup`; conversion rows fill
/// `conversion_time` and `conversion_ratio`. A failed configuration keeps
/// its row with `error` set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub matrix: String,
    pub m: usize,
    pub n: usize,
    pub nnz: usize,
    #[serde(serialize_with = "ser_alg", deserialize_with = "de_alg")]
    pub algorithm: Algorithm,
    pub threads: usize,
    /// Seconds.
    pub min_time: Option<f64>,
    /// Sequential CRS minimum divided by `min_time`.
    pub speedup: Option<f64>,
    /// Seconds.
    pub conversion_time: Option<f64>,
    /// Conversion minimum divided by the best ParCRS multiplication.
    pub conversion_ratio: Option<f64>,
    pub error: Option<String>,
}

fn ser_alg<S: Serializer>(a: &Algorithm, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(a.name())
}

fn de_alg<'de, D: Deserializer<'de>>(d: D) -> Result<Algorithm, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

impl BenchRecord {
    pub fn density(&self) -> f64 {
        density(self.m, self.n, self.nnz)
    }
}

pub fn density(m: usize, n: usize, nnz: usize) -> f64 {
    if m == 0 || n == 0 {
        0.0
    } else {
        nnz as f64 / (m as f64 * n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DensityClass {
    /// Density of at least the threshold.
    Regular,
    /// Density below the threshold.
    UltraSparse,
}

pub fn density_class(density: f64) -> DensityClass {
    if density < DENSITY_THRESHOLD {
        DensityClass::UltraSparse
    } else {
        DensityClass::Regular
    }
}

pub fn emit_report(records: &[BenchRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => to_csv(records),
        OutputFormat::Markdown => to_markdown(records),
    }
}

/// Header plus one line per record; floats keep their shortest exact form.
pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.serialize(r).expect("records serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

const CSV_HEADER: [&str; 11] = [
    "matrix",
    "m",
    "n",
    "nnz",
    "algorithm",
    "threads",
    "min_time",
    "speedup",
    "conversion_time",
    "conversion_ratio",
    "error",
];

pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(BenchError::Config(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|rec| rec.map_err(BenchError::from)).collect()
}

/// Which figure a table shows and which end of it is best.
#[derive(Clone, Copy)]
enum Metric {
    Speedup,
    ConversionRatio,
}

impl Metric {
    fn title(self) -> &'static str {
        match self {
            Metric::Speedup => "speedup over sequential CRS",
            Metric::ConversionRatio => "conversion cost in ParCRS multiplications",
        }
    }

    fn get(self, r: &BenchRecord) -> Option<f64> {
        match self {
            Metric::Speedup => r.speedup,
            Metric::ConversionRatio => r.conversion_ratio,
        }
    }

    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Metric::Speedup => a > b,
            Metric::ConversionRatio => a < b,
        }
    }
}

fn cell(v: f64) -> String {
    format!("{v:.2}")
}

/// Matrices grouped by density class, one table per metric present; rows
/// are algorithms, columns thread counts, and every entry equal (as
/// printed) to the best of its column is bold.
pub fn to_markdown(records: &[BenchRecord]) -> String {
    let mut out = String::from("# SpMV benchmark report\n\nThreads are not pinned to cores.\n");
    for class in [DensityClass::Regular, DensityClass::UltraSparse] {
        let mut matrices: Vec<&str> = Vec::new();
        for r in records.iter().filter(|r| density_class(r.density()) == class) {
            if !matrices.contains(&r.matrix.as_str()) {
                matrices.push(&r.matrix);
            }
        }
        if matrices.is_empty() {
            continue;
        }
        let heading = match class {
            DensityClass::Regular => "density >= 1e-6",
            DensityClass::UltraSparse => "density < 1e-6",
        };
        let _ = write!(out, "\n## {heading}\n");
        for name in matrices {
            let rows: Vec<&BenchRecord> = records.iter().filter(|r| r.matrix == name).collect();
            let first = rows[0];
            let _ = write!(
                out,
                "\n### {name} ({}x{}, nnz {}, density {:.3e})\n",
                first.m,
                first.n,
                first.nnz,
                first.density()
            );
            for metric in [Metric::Speedup, Metric::ConversionRatio] {
                if rows.iter().any(|r| metric.get(r).is_some()) {
                    table(&mut out, &rows, metric);
                }
            }
            let errors: Vec<&&BenchRecord> = rows.iter().filter(|r| r.error.is_some()).collect();
            if !errors.is_empty() {
                out.push('\n');
                for r in errors {
                    let _ = writeln!(out, "- {} p={}: {}", r.algorithm, r.threads, r.error.as_deref().unwrap_or(""));
                }
            }
        }
    }
    out
}

fn table(out: &mut String, rows: &[&BenchRecord], metric: Metric) {
    let mut threads: Vec<usize> = rows.iter().map(|r| r.threads).collect();
    threads.sort_unstable();
    threads.dedup();
    let mut algs: Vec<Algorithm> = rows.iter().map(|r| r.algorithm).collect();
    algs.sort_unstable();
    algs.dedup();

    let value = |alg: Algorithm, p: usize| {
        rows.iter().find(|r| r.algorithm == alg && r.threads == p).and_then(|r| metric.get(r))
    };
    let best: Vec<Option<String>> = threads
        .iter()
        .map(|&p| {
            algs.iter()
                .filter_map(|&a| value(a, p))
                .fold(None, |acc: Option<f64>, v| match acc {
                    Some(b) if !metric.better(v, b) => Some(b),
                    _ => Some(v),
                })
                .map(cell)
        })
        .collect();

    let _ = write!(out, "\n{}\n\n| algorithm |", metric.title());
    for p in &threads {
        let _ = write!(out, " p={p} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(threads.len()));
    out.push('\n');
    for &alg in &algs {
        let _ = write!(out, "| {alg} |");
        for (k, &p) in threads.iter().enumerate() {
            match value(alg, p).map(cell) {
                Some(s) if best[k].as_ref() == Some(&s) => {
                    let _ = write!(out, " **{s}** |");
                }
                Some(s) => {
                    let _ = write!(out, " {s} |");
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
}
