use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::Parser;

use asaga_bench::checks::{verify_suite, VerifyOptions};
use asaga_bench::gridsearch;
use asaga_bench::io::{dataset_hash, load_dataset, write_csr_cache};
use asaga_bench::run::{run_experiment, RunError, RunOptions};
use asaga_bench::speedup::{build_report, Aggregate};
use asaga_bench::synth::{generate, SyntheticSpec};
use asaga_bench::trace::Trace;
use asaga_bench::xstar;
use asaga_core::data::{ProblemConstants, SparseDataset, SparsityProfile};
use asaga_core::parallel::ReadMode;
use asaga_core::serial::{Method, SolverConfig, SolverError};
use asaga_core::theory;
use asaga_core::{problem_constants, sparsity_profile, standardize, Objective};

mod cli;
use cli::{AutoOr, Cli, Command, DataArgs, SolverArgs};

/// Exit codes: 0 success, 1 usage, 2 numerical failure/divergence,
/// 3 property-suite failure.
enum AppError {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &anyhow::Error {
        match self {
            AppError::Usage(e) | AppError::Numerical(e) => e,
        }
    }
}

fn usage<T>(err: impl Into<anyhow::Error>) -> Result<T, AppError> {
    Err(AppError::Usage(err.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, AppError> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Gridsearch(args) => cmd_gridsearch(args),
        Command::Speedup(args) => cmd_speedup(args),
        Command::Overlap(args) => cmd_overlap(args),
        Command::Verify(args) => Ok(cmd_verify(args)),
        Command::Cache(args) => cmd_cache(args),
    }
}

/// Loaded dataset with its derived statistics.
struct Workbench {
    data: SparseDataset,
    profile: SparsityProfile,
    lambda: f64,
    constants: ProblemConstants,
    source: String,
}

impl Workbench {
    fn objective(&self) -> Objective<'_> {
        Objective::new(&self.data, &self.profile, self.lambda)
            .expect("lambda validated at construction")
    }
}

fn load_workbench(args: &DataArgs) -> Result<Workbench, AppError> {
    let data = if let Some(body) = args.data.strip_prefix("synth:") {
        let spec = SyntheticSpec::parse(body).map_err(|e| AppError::Usage(e.into()))?;
        generate(&spec)
    } else {
        load_dataset(Path::new(&args.data)).map_err(|e| AppError::Usage(e.into()))?
    };
    let data = if args.standardize { standardize(&data) } else { data };
    let lambda = match args.lambda {
        AutoOr::Auto => 1.0 / data.n() as f64,
        AutoOr::Value(v) => v,
    };
    let profile = sparsity_profile(&data);
    let constants = problem_constants(&data, lambda).map_err(|e| AppError::Usage(e.into()))?;
    Ok(Workbench { data, profile, lambda, constants, source: args.data.clone() })
}

fn resolve_gamma(solver: &SolverArgs, wb: &Workbench) -> Result<f64, AppError> {
    match solver.gamma {
        AutoOr::Value(v) => Ok(v),
        AutoOr::Auto => {
            let tau_prior = solver.workers.saturating_sub(1) as f64;
            let a = theory::asaga_stepsize(tau_prior, wb.profile.delta, wb.constants.kappa)
                .map_err(|e| AppError::Usage(e.into()))?;
            let gamma = a / wb.constants.l_smooth;
            eprintln!(
                "gamma auto: a*(τ={tau_prior}) = {a:.6e} → γ = {gamma:.6e} (Δ = {:.4}, κ = {:.2})",
                wb.profile.delta, wb.constants.kappa
            );
            Ok(gamma)
        }
    }
}

fn cache_dir_of(solver: &SolverArgs) -> Option<PathBuf> {
    if solver.cache_dir.eq_ignore_ascii_case("none") {
        None
    } else {
        Some(PathBuf::from(&solver.cache_dir))
    }
}

fn resolve_reference(wb: &Workbench, solver: &SolverArgs) -> Result<(Vec<f64>, f64), AppError> {
    let obj = wb.objective();
    let dir = cache_dir_of(solver);
    let hash = dataset_hash(&wb.data);
    let reference = xstar::load_or_solve(
        &obj,
        &hash,
        solver.xstar_tol,
        asaga_core::objective::REFERENCE_MAX_EPOCHS,
        dir.as_deref(),
    )
    .map_err(|e| AppError::Numerical(e.into()))?;
    if reference.from_cache {
        eprintln!("reference optimum: cache hit for {hash} (f* = {:.12e})", reference.f_star);
    } else {
        eprintln!(
            "reference optimum: no cache entry for {hash}, solved to ‖∇f‖∞ ≤ {:.1e} \
             (f* = {:.12e})",
            solver.xstar_tol, reference.f_star
        );
    }
    Ok((reference.x_star, reference.f_star))
}

fn solver_config(solver: &SolverArgs, gamma: f64) -> SolverConfig {
    SolverConfig {
        gamma,
        epochs: solver.epochs,
        seed: solver.seed,
        target_subopt: solver.target,
        record_every: solver.record_every,
    }
}

fn run_options(solver: &SolverArgs, collect_overlap: bool) -> RunOptions {
    RunOptions {
        workers: solver.workers,
        counter_stride: solver.counter_stride,
        write_mode: asaga_core::parallel::WriteMode::Atomic,
        read_mode: if solver.theoretical_reads {
            ReadMode::FullReadFirst
        } else {
            ReadMode::SampleFirst
        },
        svrg_m: solver.svrg_m,
        collect_overlap,
    }
}

fn validate_solver(solver: &SolverArgs, method: Method) -> Result<(), AppError> {
    if solver.theoretical_reads && method != Method::Asaga {
        return usage(anyhow!("--theoretical-reads only applies to --method asaga"));
    }
    if method.is_serial() && solver.workers != 1 {
        return usage(anyhow!(
            "method {method} is serial; --workers must be 1 (got {})",
            solver.workers
        ));
    }
    Ok(())
}

fn map_run_error(err: RunError) -> AppError {
    match err {
        RunError::Solver(SolverError::InvalidConfig(_)) | RunError::WorkerCount { .. } => {
            AppError::Usage(err.into())
        }
        _ => AppError::Numerical(err.into()),
    }
}

fn print_theory_report(wb: &Workbench, tau: f64, label: &str) {
    let n = wb.data.n() as u64;
    match theory::rate_estimate(n, wb.constants.kappa, wb.profile.delta, tau) {
        Ok(est) => eprintln!(
            "theory at {label} = {tau:.2}: a* = {:.6e} (γ = {:.6e}), ξ = {:.6}, \
             ρ = {:.3e}/iter, {} regime",
            est.a_star,
            est.a_star / wb.constants.l_smooth,
            est.xi,
            est.rho,
            est.regime
        ),
        Err(e) => eprintln!("theory at {label} = {tau:.2}: {e}"),
    }
    match theory::speedup_condition(tau, n, wb.constants.kappa, wb.profile.delta) {
        Ok(cond) => {
            eprintln!(
                "speedup bounds: τ < n/10 = {:.1} ({}); τ < (1/√Δ)·max(1, n/κ) = {:.1} ({})",
                cond.bound_n,
                if cond.holds_n { "holds" } else { "VIOLATED" },
                cond.bound_sparsity,
                if cond.holds_sparsity { "holds" } else { "VIOLATED" },
            );
            if !cond.holds_n {
                eprintln!(
                    "warning: τ ≥ n/10; convergence still holds but with much worse constants"
                );
            }
        }
        Err(e) => eprintln!("speedup bounds: {e}"),
    }
}

fn cmd_fit(args: cli::FitArgs) -> Result<ExitCode, AppError> {
    let method = args.solver.method;
    validate_solver(&args.solver, method)?;
    let wb = load_workbench(&args.data)?;
    eprintln!(
        "data: {} (n = {}, d = {}, nnz = {}, Δ = {:.4}, L = {:.6e}, κ = {:.2}, λ = {:.6e})",
        wb.source,
        wb.data.n(),
        wb.data.dim(),
        wb.data.nnz(),
        wb.profile.delta,
        wb.constants.l_smooth,
        wb.constants.kappa,
        wb.lambda
    );
    let gamma = resolve_gamma(&args.solver, &wb)?;
    let (_, f_star) = resolve_reference(&wb, &args.solver)?;
    let obj = wb.objective();
    let config = solver_config(&args.solver, gamma);
    let opts = run_options(&args.solver, !method.is_serial());

    eprintln!(
        "run: method={method} workers={} gamma={gamma:.6e} epochs={} seed={}",
        opts.workers, config.epochs, config.seed
    );
    let out = run_experiment(method, &obj, &config, f_star, &opts).map_err(map_run_error)?;

    match &args.out {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("creating {}", path.display()))
                .map_err(AppError::Usage)?;
            out.trace
                .write_csv(BufWriter::new(file))
                .context("writing trace")
                .map_err(AppError::Usage)?;
            eprintln!("trace: {} records → {}", out.trace.records.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            out.trace
                .write_csv(stdout.lock())
                .context("writing trace")
                .map_err(AppError::Usage)?;
        }
    }

    if let Some(final_subopt) = out.trace.final_suboptimality() {
        eprintln!("final suboptimality: {final_subopt:.6e}");
    }
    if out.trace.clamped > 0 {
        eprintln!(
            "note: {} record(s) with tiny negative suboptimality clamped to 0 \
             (inconsistent snapshots near the optimum)",
            out.trace.clamped
        );
    }
    if let Some(tau) = out.trace.tau_hat {
        eprintln!("overlap: τ̂ = {tau:.2} (lower-bound estimate, workers = {})", opts.workers);
        print_theory_report(&wb, tau, "τ̂");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gridsearch(args: cli::GridsearchArgs) -> Result<ExitCode, AppError> {
    let method = args.solver.method;
    validate_solver(&args.solver, method)?;
    let wb = load_workbench(&args.data)?;
    let (_, f_star) = resolve_reference(&wb, &args.solver)?;
    let obj = wb.objective();

    let lo = args.grid_min.unwrap_or(1.0 / (10.0 * wb.constants.l_smooth));
    let hi = args.grid_max.unwrap_or(10.0 / wb.constants.l_smooth);
    let gammas = gridsearch::grid(lo, hi, args.grid_points)
        .map_err(|e| AppError::Usage(e.into()))?;
    eprintln!(
        "grid: {} candidates in [{lo:.6e}, {hi:.6e}], budget {} epochs",
        gammas.len(),
        args.solver.epochs
    );

    let base = solver_config(&args.solver, 1.0);
    let opts = run_options(&args.solver, false);
    let result = gridsearch::search(method, &obj, &base, f_star, &opts, &gammas)
        .map_err(|e| AppError::Numerical(e.into()))?;

    for c in &result.candidates {
        eprintln!(
            "  γ = {:.6e} → {}",
            c.gamma,
            match (c.diverged, c.final_suboptimality) {
                (true, _) => "diverged".to_string(),
                (false, Some(s)) => format!("{s:.6e}"),
                (false, None) => "no records".to_string(),
            }
        );
    }
    if result.boundary_winner {
        eprintln!(
            "warning: best step size sits on the grid boundary; widen the grid \
             before trusting it"
        );
    }
    if let Some(path) = &args.out {
        let mut file = BufWriter::new(
            File::create(path)
                .with_context(|| format!("creating {}", path.display()))
                .map_err(AppError::Usage)?,
        );
        writeln!(file, "gamma,final_suboptimality,diverged")
            .and_then(|_| {
                for c in &result.candidates {
                    writeln!(
                        file,
                        "{:.16e},{},{}",
                        c.gamma,
                        c.final_suboptimality.map(|s| format!("{s:.16e}")).unwrap_or_default(),
                        c.diverged
                    )?;
                }
                Ok(())
            })
            .context("writing grid table")
            .map_err(AppError::Usage)?;
    }
    println!("best_gamma {:.16e}", result.best_gamma);
    eprintln!(
        "best γ = {:.6e} with final suboptimality {:.6e}",
        result.best_gamma, result.best_suboptimality
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_speedup(args: cli::SpeedupArgs) -> Result<ExitCode, AppError> {
    let method = args.solver.method;
    if method.is_serial() {
        return usage(anyhow!("speedup applies to the asynchronous methods, got {method}"));
    }
    if args.repeats == 0 {
        return usage(anyhow!("--repeats must be ≥ 1"));
    }
    let wb = load_workbench(&args.data)?;
    let gamma = resolve_gamma(&args.solver, &wb)?;
    let (_, f_star) = resolve_reference(&wb, &args.solver)?;
    let obj = wb.objective();
    let target = args
        .solver
        .target
        .unwrap_or(if method == Method::Hogwild { 1e-3 } else { 1e-5 });

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(AppError::Usage)?;

    let mut runs: Vec<(usize, Trace)> = Vec::new();
    for &workers in &args.workers_list.0 {
        for rep in 0..args.repeats {
            let config = SolverConfig {
                gamma,
                epochs: args.solver.epochs,
                seed: args.solver.seed + rep,
                target_subopt: Some(target),
                record_every: args.solver.record_every,
            };
            let opts = RunOptions { workers, ..run_options(&args.solver, false) };
            let out = run_experiment(method, &obj, &config, f_star, &opts)
                .map_err(map_run_error)?;
            let path = args.out.join(format!("trace-{method}-w{workers}-rep{rep}.csv"));
            let file = File::create(&path)
                .with_context(|| format!("creating {}", path.display()))
                .map_err(AppError::Usage)?;
            out.trace
                .write_csv(BufWriter::new(file))
                .context("writing trace")
                .map_err(AppError::Usage)?;
            runs.push((workers, out.trace));
        }
    }

    let how = if args.mean { Aggregate::Mean } else { Aggregate::Median };
    let report = build_report(method, target, gamma, wb.lambda, args.solver.seed, how, &runs);
    let csv_path = args.out.join("speedup.csv");
    let file = File::create(&csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))
        .map_err(AppError::Usage)?;
    report
        .write_csv(BufWriter::new(file))
        .context("writing speedup table")
        .map_err(AppError::Usage)?;
    report.print_summary(std::io::stdout().lock()).ok();
    for row in &report.rows {
        if row.reached < row.repeats {
            eprintln!(
                "note: {} of {} runs with {} workers never reached {target:.1e}; \
                 those rows stay empty",
                row.repeats - row.reached,
                row.repeats,
                row.workers
            );
        }
    }
    eprintln!("speedup table → {}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_overlap(args: cli::OverlapArgs) -> Result<ExitCode, AppError> {
    let method = args.solver.method;
    if method.is_serial() {
        return usage(anyhow!("overlap applies to the asynchronous methods, got {method}"));
    }
    if args.repeats == 0 {
        return usage(anyhow!("--repeats must be ≥ 1"));
    }
    let wb = load_workbench(&args.data)?;
    let gamma = resolve_gamma(&args.solver, &wb)?;
    let obj = wb.objective();
    let ratio = asaga_bench::run::iteration_time_ratio(&obj);
    eprintln!("iteration-time ratio R ≈ {ratio:.2} (max/min over sampled steps)");

    let mut rows = Vec::new();
    for &workers in &args.workers_list.0 {
        let mut taus = Vec::new();
        for rep in 0..args.repeats {
            let config = SolverConfig {
                gamma,
                epochs: args.solver.epochs,
                seed: args.solver.seed + rep,
                target_subopt: None,
                record_every: args.solver.record_every,
            };
            let opts = RunOptions {
                workers,
                collect_overlap: true,
                ..run_options(&args.solver, true)
            };
            let out = run_experiment(method, &obj, &config, 0.0, &opts)
                .map_err(map_run_error)?;
            if let Some(tau) = out.trace.tau_hat {
                taus.push(tau);
            }
        }
        if taus.is_empty() {
            return Err(AppError::Numerical(anyhow!(
                "no overlap windows collected for {workers} workers; \
                 increase --epochs (need ≥ 100 iterations per worker)"
            )));
        }
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tau = taus[taus.len() / 2];
        rows.push((workers, tau));
    }

    let mut csv = String::from("workers,tau_hat,workers_minus_one,upper_bound\n");
    for &(workers, tau) in &rows {
        let upper = (workers.saturating_sub(1)) as f64 * ratio;
        csv.push_str(&format!(
            "{workers},{tau:.16e},{},{upper:.16e}\n",
            workers.saturating_sub(1)
        ));
        eprintln!(
            "workers = {workers}: τ̂ = {tau:.2} (p−1 = {}, upper heuristic (p−1)·R = {upper:.2})",
            workers - 1
        );
    }
    match &args.out {
        Some(path) => {
            fs::write(path, csv)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(AppError::Usage)?;
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: cli::VerifyArgs) -> ExitCode {
    let opts = VerifyOptions {
        inject_racy_writes: args.inject_racy_writes,
        inject_bad_d_diag: args.inject_bad_d_diag,
    };
    if opts.inject_racy_writes {
        println!("fault injection: unsynchronized writes (the lost-update check must fail)");
    }
    if opts.inject_bad_d_diag {
        println!("fault injection: reweighting diagonal × 2 (the unbiasedness check must fail)");
    }
    let mut failures = 0usize;
    for (name, result) in verify_suite(&opts) {
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    if failures == 0 {
        println!("verify: all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("verify: {failures} check(s) failed");
        ExitCode::from(3)
    }
}

fn cmd_cache(args: cli::CacheArgs) -> Result<ExitCode, AppError> {
    let data = load_dataset(&args.data).map_err(|e| AppError::Usage(e.into()))?;
    write_csr_cache(&args.out, &data).map_err(|e| AppError::Usage(e.into()))?;
    eprintln!(
        "cached {} (n = {}, d = {}, nnz = {}, hash = {}) → {}",
        args.data.display(),
        data.n(),
        data.dim(),
        data.nnz(),
        dataset_hash(&data),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
