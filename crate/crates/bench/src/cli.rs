//! Command-line interface definitions.

use std::path::PathBuf;

use asaga_core::Method;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "asaga",
    version,
    about = "Sparse SAGA and lock-free asynchronous solvers for L2-regularized logistic regression",
    after_help = "Exit codes: 0 success, 1 usage error, 2 numerical failure or divergence, \
                  3 property-suite failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one solver and emit its suboptimality trace as CSV.
    Fit(FitArgs),
    /// Sweep a step-size grid and report the best γ.
    Gridsearch(GridsearchArgs),
    /// Measure wall-clock and iterations-to-target speedups over worker counts.
    Speedup(SpeedupArgs),
    /// Estimate the overlap constant τ̂ over worker counts.
    Overlap(OverlapArgs),
    /// Run the built-in property suite.
    Verify(VerifyArgs),
    /// Convert a libsvm text file into the binary CSR cache format.
    Cache(CacheArgs),
}

/// `auto` or an explicit positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

pub fn parse_auto_or(s: &str) -> Result<AutoOr, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(AutoOr::Auto);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is neither `auto` nor a number"))?;
    if v > 0.0 {
        Ok(AutoOr::Value(v))
    } else {
        Err("must be positive".into())
    }
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: asaga_core::serial::UnknownMethod| e.to_string())
}

/// Comma-separated worker counts, parsed as one argument value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkersList(pub Vec<usize>);

pub fn parse_workers_list(s: &str) -> Result<WorkersList, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let w: usize =
            item.trim().parse().map_err(|_| format!("bad worker count `{item}`"))?;
        if w == 0 {
            return Err("worker counts must be ≥ 1".into());
        }
        out.push(w);
    }
    if out.is_empty() {
        return Err("empty workers list".into());
    }
    Ok(WorkersList(out))
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Dataset: a libsvm text file, a binary CSR cache, or an inline
    /// synthetic spec like `synth:n=200,d=50,k=5,seed=1,noise=0.05`.
    #[arg(long)]
    pub data: String,

    /// Z-score every feature column (output is 100% dense).
    #[arg(long)]
    pub standardize: bool,

    /// Regularization weight; `auto` means 1/n.
    #[arg(long, value_parser = parse_auto_or, default_value = "auto")]
    pub lambda: AutoOr,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    /// Solver to run.
    #[arg(long, value_parser = parse_method)]
    pub method: Method,

    /// Worker threads (asynchronous methods only; serial methods take 1).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Step size; `auto` means a*(workers−1)/L from the step-size theory.
    #[arg(long, value_parser = parse_auto_or, default_value = "auto")]
    pub gamma: AutoOr,

    /// Pass budget: the run executes epochs·n iterations.
    #[arg(long, default_value_t = 20)]
    pub epochs: u64,

    /// Sampler seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Stop early once suboptimality reaches this target.
    #[arg(long)]
    pub target: Option<f64>,

    /// Trace stride in iterations (serial record stride and asynchronous
    /// snapshot stride).
    #[arg(long, default_value_t = 100)]
    pub record_every: u64,

    /// Stride of the shared iteration counter.
    #[arg(long, default_value_t = 100)]
    pub counter_stride: u64,

    /// SVRG / Kromagnon inner-loop length (default: n).
    #[arg(long)]
    pub svrg_m: Option<u64>,

    /// ASAGA only: use the analyzed full-read protocol (read all of x and α
    /// in fixed order before sampling; ᾱ recomputed per iteration).
    /// Desk-scale validation only.
    #[arg(long)]
    pub theoretical_reads: bool,

    /// Directory for the reference-optimum cache (`none` disables caching).
    #[arg(long, default_value = ".asaga-cache")]
    pub cache_dir: String,

    /// Gradient-norm tolerance of the reference solve.
    #[arg(long, default_value_t = 1e-12)]
    pub xstar_tol: f64,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Trace CSV destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridsearchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Lower grid bound (default 1/(10L)).
    #[arg(long)]
    pub grid_min: Option<f64>,
    /// Upper grid bound (default 10/L).
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Number of equally spaced candidates.
    #[arg(long, default_value_t = 10)]
    pub grid_points: usize,
    /// Candidate table CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SpeedupArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Worker counts to measure, e.g. `1,2,4`.
    #[arg(long, value_parser = parse_workers_list)]
    pub workers_list: WorkersList,
    /// Runs per worker count.
    #[arg(long, default_value_t = 3)]
    pub repeats: u64,
    /// Aggregate with the mean instead of the median.
    #[arg(long)]
    pub mean: bool,
    /// Output directory: per-run traces plus `speedup.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OverlapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Worker counts to measure, e.g. `1,2,4`.
    #[arg(long, value_parser = parse_workers_list)]
    pub workers_list: WorkersList,
    /// Runs per worker count (the median τ̂ is reported).
    #[arg(long, default_value_t = 3)]
    pub repeats: u64,
    /// Overlap table CSV destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Fault injection: replace atomic adds with plain read-add-write; the
    /// lost-update check must then fail.
    #[arg(long)]
    pub inject_racy_writes: bool,
    /// Fault injection: scale the reweighting diagonal by 2; the
    /// unbiasedness check must then fail.
    #[arg(long)]
    pub inject_bad_d_diag: bool,
}

#[derive(Args, Debug)]
pub struct CacheArgs {
    /// Input dataset (libsvm text or an existing cache).
    #[arg(long)]
    pub data: PathBuf,
    /// Output path for the binary CSR cache.
    #[arg(long)]
    pub out: PathBuf,
}
