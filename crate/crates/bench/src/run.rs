//! Experiment execution: timed serial runs and multi-threaded shared-memory
//! runs over one `SharedState`.
//!
//! Asynchronous runs split the `epochs·n` iteration budget evenly across
//! workers, each sampling from its own seeded stream. A dedicated observer
//! thread polls the shared iteration counter and copies `x` whenever it has
//! advanced by at least `record_every` iterations; the copies are
//! inconsistent reads by design, and their suboptimality is computed
//! offline after the workers join. Tiny negative suboptimalities from that
//! inconsistency are clamped to zero and counted.
//!
//! A worker panic propagates out of the thread scope and aborts the whole
//! run with the worker's diagnostic.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Barrier;
use std::time::{Duration, Instant};

use asaga_core::parallel::{
    asaga_worker, estimate_overlap_multi, hogwild_worker, kromagnon_inner_worker,
    kromagnon_reference_chunk, AtomicF64Vec, ColumnIndex, KromagnonShared, OverlapSample,
    ReadMode, SharedState, WorkerOptions, WriteMode, DEFAULT_COUNTER_STRIDE, OVERLAP_WINDOW,
};
use asaga_core::rng::SplitMix64;
use asaga_core::serial::{run_serial, Method, SolverConfig, SolverError, DIVERGENCE_FACTOR};
use asaga_core::Objective;
use thiserror::Error;

use crate::trace::{Trace, TraceRecord};

/// Execution knobs beyond the solver config.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub workers: usize,
    pub counter_stride: u64,
    pub write_mode: WriteMode,
    pub read_mode: ReadMode,
    /// SVRG/Kromagnon inner-loop length (default `n`).
    pub svrg_m: Option<u64>,
    pub collect_overlap: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            counter_stride: DEFAULT_COUNTER_STRIDE,
            write_mode: WriteMode::Atomic,
            read_mode: ReadMode::SampleFirst,
            svrg_m: None,
            collect_overlap: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(
        "divergence detected: final suboptimality {suboptimality:e} from initial {initial:e}"
    )]
    Diverged { suboptimality: f64, initial: f64 },
    #[error("method {method} is serial; it runs with exactly 1 worker (got {workers})")]
    WorkerCount { method: Method, workers: usize },
}

pub struct RunOutput {
    pub trace: Trace,
    pub final_x: Vec<f64>,
}

/// Run one experiment end to end and return its trace and final iterate.
pub fn run_experiment(
    method: Method,
    obj: &Objective<'_>,
    config: &SolverConfig,
    f_star: f64,
    opts: &RunOptions,
) -> Result<RunOutput, RunError> {
    if opts.workers == 0 || (method.is_serial() && opts.workers != 1) {
        return Err(RunError::WorkerCount { method, workers: opts.workers });
    }
    if method.is_serial() {
        run_timed_serial(method, obj, config, f_star, opts)
    } else {
        config.validate()?;
        match method {
            Method::Asaga | Method::Hogwild => run_shared_async(method, obj, config, f_star, opts),
            Method::Kromagnon => run_kromagnon(obj, config, f_star, opts),
            _ => unreachable!(),
        }
    }
}

fn clamp_subopt(raw: f64, clamped: &mut usize) -> f64 {
    if raw < 0.0 {
        *clamped += 1;
        0.0
    } else {
        raw
    }
}

fn run_timed_serial(
    method: Method,
    obj: &Objective<'_>,
    config: &SolverConfig,
    f_star: f64,
    opts: &RunOptions,
) -> Result<RunOutput, RunError> {
    let mut records = Vec::new();
    let mut clamped = 0usize;
    let t0 = Instant::now();
    let final_x = run_serial(method, obj, config, f_star, opts.svrg_m, |point| {
        records.push(TraceRecord {
            iteration: point.iteration,
            wall_seconds: if point.iteration == 0 { 0.0 } else { t0.elapsed().as_secs_f64() },
            suboptimality: clamp_subopt(point.suboptimality, &mut clamped),
        });
    })?;
    Ok(RunOutput {
        trace: Trace {
            method,
            workers: 1,
            gamma: config.gamma,
            lambda: obj.lambda(),
            seed: config.seed,
            records,
            tau_hat: None,
            clamped,
        },
        final_x,
    })
}

/// Snapshots taken by the observer: `(iteration label, wall seconds, x)`.
type Snapshot = (u64, f64, Vec<f64>);

fn observe(
    x: &AtomicF64Vec,
    counter: &AtomicU64,
    done: &AtomicBool,
    t0: Instant,
    stride: u64,
) -> Vec<Snapshot> {
    let stride = stride.max(1);
    let mut snaps = Vec::new();
    let mut last = 0u64;
    loop {
        let finished = done.load(Ordering::Acquire);
        let c = counter.load(Ordering::Relaxed);
        if c >= last + stride || (finished && c > last) {
            snaps.push((c, t0.elapsed().as_secs_f64(), x.snapshot()));
            last = c;
        }
        if finished {
            return snaps;
        }
        std::thread::sleep(Duration::from_micros(100));
    }
}

fn worker_share(total: u64, workers: usize, w: usize) -> u64 {
    let base = total / workers as u64;
    base + u64::from((w as u64) < total % workers as u64)
}

fn assemble_async_output(
    obj: &Objective<'_>,
    method: Method,
    config: &SolverConfig,
    f_star: f64,
    opts: &RunOptions,
    snaps: Vec<Snapshot>,
    final_elapsed: f64,
    total: u64,
    final_x: Vec<f64>,
    overlap: Vec<Vec<OverlapSample>>,
) -> Result<RunOutput, RunError> {
    let mut clamped = 0usize;
    let initial = obj.loss(&vec![0.0; obj.dim()]) - f_star;
    let mut records = vec![TraceRecord {
        iteration: 0,
        wall_seconds: 0.0,
        suboptimality: clamp_subopt(initial, &mut clamped),
    }];
    for (iteration, wall_seconds, x) in &snaps {
        if *iteration >= total {
            break; // the final record is appended below from the quiescent x
        }
        records.push(TraceRecord {
            iteration: *iteration,
            wall_seconds: *wall_seconds,
            suboptimality: clamp_subopt(obj.loss(x) - f_star, &mut clamped),
        });
    }
    let final_raw = obj.loss(&final_x) - f_star;
    if !final_raw.is_finite() || final_raw > DIVERGENCE_FACTOR * initial.abs().max(1e-8) {
        return Err(RunError::Diverged { suboptimality: final_raw, initial });
    }
    records.push(TraceRecord {
        iteration: total,
        wall_seconds: final_elapsed,
        suboptimality: clamp_subopt(final_raw, &mut clamped),
    });

    let tau_hat = if opts.collect_overlap {
        estimate_overlap_multi(&overlap, OVERLAP_WINDOW).ok()
    } else {
        None
    };
    Ok(RunOutput {
        trace: Trace {
            method,
            workers: opts.workers,
            gamma: config.gamma,
            lambda: obj.lambda(),
            seed: config.seed,
            records,
            tau_hat,
            clamped,
        },
        final_x,
    })
}

fn run_shared_async(
    method: Method,
    obj: &Objective<'_>,
    config: &SolverConfig,
    f_star: f64,
    opts: &RunOptions,
) -> Result<RunOutput, RunError> {
    let n = obj.n();
    let total = config.epochs * n as u64;
    let shared = SharedState::new(n, obj.dim());
    let columns = (method == Method::Asaga && opts.read_mode == ReadMode::FullReadFirst)
        .then(|| ColumnIndex::build(obj.data()));
    let done = AtomicBool::new(false);
    let t0 = Instant::now();
    let worker_opts = WorkerOptions {
        counter_stride: opts.counter_stride,
        write_mode: opts.write_mode,
        read_mode: opts.read_mode,
        collect_overlap: opts.collect_overlap,
    };

    let mut overlap: Vec<Vec<OverlapSample>> = Vec::new();
    let snaps = std::thread::scope(|scope| {
        let shared_ref = &shared;
        let done_ref = &done;
        let observer =
            scope.spawn(move || observe(&shared_ref.x, &shared_ref.iter_counter, done_ref, t0, config.record_every));

        let handles: Vec<_> = (0..opts.workers)
            .map(|w| {
                let columns = columns.as_ref();
                scope.spawn(move || {
                    let mut rng = SplitMix64::stream(config.seed, w as u64);
                    let iters = worker_share(total, opts.workers, w);
                    match method {
                        Method::Asaga => asaga_worker(
                            obj,
                            shared_ref,
                            config.gamma,
                            iters,
                            &worker_opts,
                            columns,
                            &mut rng,
                        ),
                        Method::Hogwild => hogwild_worker(
                            obj,
                            shared_ref,
                            config.gamma,
                            iters,
                            &worker_opts,
                            &mut rng,
                        ),
                        _ => unreachable!(),
                    }
                })
            })
            .collect();
        for h in handles {
            overlap.push(h.join().expect("worker panicked"));
        }
        done.store(true, Ordering::Release);
        observer.join().expect("observer panicked")
    });

    let final_elapsed = t0.elapsed().as_secs_f64();
    let final_x = shared.x.snapshot();
    assemble_async_output(
        obj, method, config, f_star, opts, snaps, final_elapsed, total, final_x, overlap,
    )
}

fn run_kromagnon(
    obj: &Objective<'_>,
    config: &SolverConfig,
    f_star: f64,
    opts: &RunOptions,
) -> Result<RunOutput, RunError> {
    let n = obj.n();
    let d = obj.dim();
    let total = config.epochs * n as u64;
    let m = opts.svrg_m.unwrap_or(n as u64).max(1);
    let rounds = total.div_ceil(m);
    let shared = KromagnonShared::new(n, d);
    let barrier = Barrier::new(opts.workers + 1);
    let done = AtomicBool::new(false);
    let t0 = Instant::now();
    let inv_n = 1.0 / n as f64;
    let worker_opts = WorkerOptions {
        counter_stride: opts.counter_stride,
        write_mode: opts.write_mode,
        read_mode: ReadMode::SampleFirst,
        collect_overlap: opts.collect_overlap,
    };

    let mut overlap: Vec<Vec<OverlapSample>> = Vec::new();
    let snaps = std::thread::scope(|scope| {
        let shared_ref = &shared;
        let barrier_ref = &barrier;
        let done_ref = &done;
        let observer =
            scope.spawn(move || observe(&shared_ref.x, &shared_ref.iter_counter, done_ref, t0, config.record_every));

        let handles: Vec<_> = (0..opts.workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut rng = SplitMix64::stream(config.seed, w as u64);
                    let mut scratch = vec![0.0f64; d];
                    let mut samples = Vec::new();
                    let chunk = (w * n / opts.workers)..((w + 1) * n / opts.workers);
                    for r in 0..rounds {
                        barrier_ref.wait(); // reference frozen
                        kromagnon_reference_chunk(obj, shared_ref, chunk.clone(), &mut scratch);
                        barrier_ref.wait(); // all chunks accumulated
                        barrier_ref.wait(); // batch term finalized
                        let this_m = m.min(total - r * m);
                        let share = worker_share(this_m, opts.workers, w);
                        samples.extend(kromagnon_inner_worker(
                            obj,
                            shared_ref,
                            config.gamma,
                            share,
                            &worker_opts,
                            &mut rng,
                        ));
                        barrier_ref.wait(); // round complete
                    }
                    samples
                })
            })
            .collect();

        for r in 0..rounds {
            let _ = r;
            shared.begin_reference();
            barrier.wait(); // workers compute chunks
            barrier.wait(); // chunks done
            shared.finish_reference(inv_n);
            barrier.wait(); // inner phase open
            barrier.wait(); // round complete
        }
        for h in handles {
            overlap.push(h.join().expect("worker panicked"));
        }
        done.store(true, Ordering::Release);
        observer.join().expect("observer panicked")
    });

    let final_elapsed = t0.elapsed().as_secs_f64();
    let final_x = shared.x.snapshot();
    assemble_async_output(
        obj,
        Method::Kromagnon,
        config,
        f_star,
        opts,
        snaps,
        final_elapsed,
        total,
        final_x,
        overlap,
    )
}

/// Ratio of the slowest to the fastest single-iteration time, measured
/// serially over sampled steps (median of a few repetitions per sample).
/// This is the `R` in the `(p−1)·R` overlap upper-bound heuristic; it
/// tracks the cost spread of the support-size distribution plus timer
/// noise, so treat it as a rough bound, not a measurement of τ.
pub fn iteration_time_ratio(obj: &Objective<'_>) -> f64 {
    use asaga_core::serial::{saga_sparse_step, SerialState};

    let n = obj.n();
    let mut state = SerialState::zeros(n, obj.dim());
    let step = (n / 256).max(1);
    let mut fastest = f64::INFINITY;
    let mut slowest = 0.0f64;
    let mut i = 0usize;
    while i < n {
        let mut times = [0.0f64; 5];
        for slot in &mut times {
            let t = Instant::now();
            saga_sparse_step(obj, &mut state, i, 1e-9);
            *slot = t.elapsed().as_secs_f64();
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = times[2];
        fastest = fastest.min(median);
        slowest = slowest.max(median);
        i += step;
    }
    if fastest > 0.0 {
        slowest / fastest
    } else {
        1.0
    }
}
