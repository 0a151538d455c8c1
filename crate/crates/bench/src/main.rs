use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spmv_bench::clock::{timer_resolution, MonotonicClock};
use spmv_bench::config::{available_cores, default_threads, parse_algorithms, parse_threads, DEFAULT_CONVERT_REPS, DEFAULT_SPMV_REPS, DEFAULT_WARMUP};
use spmv_bench::report::{density, density_class};
use spmv_bench::{
    bench_convert, bench_spmv, emit_report, load_matrix, verify, BenchConfig, BenchError, BenchRecord, MatrixSource,
    OutputFormat,
};
use spmv_core::blocked::{select_block_size, BCOH_INDEX_BITS, CSB_INDEX_BITS, DEFAULT_L2_BYTES};
use spmv_core::io::{cache_write_file, write_matrix_market};

#[derive(Parser)]
#[command(name = "spmvlab", version, about = "Benchmark and verify parallel SpMV engines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum-of-runs SpMV timing for each algorithm and thread count.
    BenchSpmv(Common),
    /// Conversion timing, normalised to the fastest ParCRS multiplication.
    BenchConvert(Common),
    /// Compare every engine with the triplet kernel; nonzero exit on mismatch.
    Verify(Common),
    /// Write a matrix (usually `synthetic:M:N:NNZ[:SKEW]`) to --out.
    Generate(Common),
    /// Describe a matrix and the host.
    Info(Common),
}

#[derive(Args)]
struct Common {
    /// Matrix Market file, binary cache, or `synthetic:M:N:NNZ[:SKEW]`.
    #[arg(long)]
    matrix: String,
    /// Comma-separated engine names, or `all`.
    #[arg(long, default_value = "all")]
    algs: String,
    /// Comma-separated thread counts [default: powers of two up to the core count].
    #[arg(long)]
    threads: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SPMV_REPS)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_CONVERT_REPS)]
    convert_reps: usize,
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    warmup: usize,
    #[arg(long, default_value_t = DEFAULT_L2_BYTES)]
    l2_bytes: usize,
    /// CSB: block rows and blocks above this many nonzeros are split [default: 2 * beta].
    #[arg(long)]
    split_threshold: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or md.
    #[arg(long, default_value = "csv")]
    format: String,
}

impl Common {
    fn config(&self) -> Result<BenchConfig, BenchError> {
        let config = BenchConfig {
            matrix: self.matrix.parse()?,
            algorithms: parse_algorithms(&self.algs)?,
            threads: match &self.threads {
                Some(t) => parse_threads(t)?,
                None => default_threads(),
            },
            spmv_reps: self.reps,
            convert_reps: self.convert_reps,
            warmup: self.warmup,
            l2_bytes: self.l2_bytes,
            split_threshold: self.split_threshold,
            seed: self.seed,
            out: self.out.clone(),
            format: self.format.parse()?,
        };
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, BenchError> {
    match command {
        Command::BenchSpmv(c) => {
            let config = c.config()?;
            check_clock()?;
            let records = bench_spmv(&mut MonotonicClock, &config)?;
            emit(&records, &config)
        }
        Command::BenchConvert(c) => {
            let config = c.config()?;
            check_clock()?;
            let records = bench_convert(&mut MonotonicClock, &config)?;
            emit(&records, &config)
        }
        Command::Verify(c) => {
            let report = verify(&c.config()?)?;
            println!("{report}");
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                for e in report.failures() {
                    eprintln!("mismatch: {e}");
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Generate(c) => {
            let config = c.config()?;
            let out = config.out.clone().ok_or_else(|| BenchError::Config("generate needs --out".into()))?;
            let m = load_matrix(&config.matrix, config.seed)?;
            write_matrix(&m.matrix, &out)?;
            println!("wrote {} ({}x{}, {} nonzeros) to {}", m.name, m.matrix.m(), m.matrix.n(), m.matrix.nnz(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Info(c) => {
            let config = c.config()?;
            info(&config)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Binary cache for `.bin`/`.cache`, Matrix Market otherwise.
fn write_matrix(a: &spmv_core::formats::TripletMatrix, out: &Path) -> Result<(), BenchError> {
    match out.extension().and_then(|e| e.to_str()) {
        Some("bin" | "cache") => cache_write_file(a, out)?,
        _ => write_matrix_market(a, std::io::BufWriter::new(std::fs::File::create(out)?))?,
    }
    Ok(())
}

fn check_clock() -> Result<(), BenchError> {
    let res = timer_resolution();
    if res >= 1e-6 {
        return Err(BenchError::Config(format!("timer resolution {res:e} s is not below 1 us")));
    }
    Ok(())
}

fn emit(records: &[BenchRecord], config: &BenchConfig) -> Result<ExitCode, BenchError> {
    let text = emit_report(records, config.format);
    match &config.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} configuration(s) failed; see the error column");
    }
    Ok(ExitCode::SUCCESS)
}

fn info(config: &BenchConfig) -> Result<(), BenchError> {
    let m = load_matrix(&config.matrix, config.seed)?;
    let a = &m.matrix;
    let d = density(a.m(), a.n(), a.nnz());
    println!("matrix        {}", m.name);
    if let MatrixSource::File(p) = &config.matrix {
        println!("path          {}", p.display());
    }
    println!("size          {} x {}", a.m(), a.n());
    println!("nonzeros      {}", a.nnz());
    println!("density       {d:.3e} ({:?})", density_class(d));
    let counts = a.row_counts();
    if let Some(&max) = counts.iter().max() {
        println!("max row nnz   {max} ({:.1}% of nnz)", 100.0 * max as f64 / a.nnz().max(1) as f64);
        println!("empty rows    {}", counts.iter().filter(|&&c| c == 0).count());
    }
    let side = a.m().max(a.n()).max(1);
    let csb = select_block_size(side, CSB_INDEX_BITS, config.l2_bytes, 8);
    let bcoh = select_block_size(side, BCOH_INDEX_BITS, config.l2_bytes, 8);
    println!("beta          {} (CSB, MergeB), {} (BCOH)", csb.beta(), bcoh.beta());
    println!("cores         {}", available_cores());
    println!("timer         {:.1e} s resolution", timer_resolution());
    println!("pinning       threads are not pinned to cores");
    if config.format == OutputFormat::Markdown {
        println!("(info ignores --format)");
    }
    Ok(())
}
