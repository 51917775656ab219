//! The lock-free shared-memory engine.
//!
//! Workers share three structures: the iterate `x`, the scalar gradient
//! memory `α` and its running average `ᾱ`, each stored as a vector of
//! independently updatable 64-bit atomics. The contract is deliberately
//! weak:
//!
//! * no write is ever lost — concurrent coordinate adds compose exactly,
//!   enforced by a compare-and-swap retry loop on the coordinate's bit
//!   pattern;
//! * reads carry **no** snapshot guarantee — a vector read may match no
//!   state the shared memory ever passed through. That inconsistency is the
//!   contract, not a bug; all orderings are `Relaxed` since nothing assumes
//!   a happens-before between distinct coordinates.
//!
//! Multi-worker runs are therefore not reproducible run-to-run; only
//! statistical assertions apply to them. A single worker, however, replays
//! the corresponding serial solver bit-for-bit.
//!
//! A shared iteration counter, bumped sparsely (every `counter_stride` local
//! iterations so the counter itself is not a contention hotspot), provides
//! both the trace x-axis and the overlap (τ) instrumentation: each iteration
//! reads the counter before its first shared read and after its last write,
//! and τ̂ is the maximum over 100-iteration windows of the mean label gap.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::data::SparseDataset;
use crate::objective::{sigma, Objective};
use crate::rng::SplitMix64;
use crate::updates::{
    alpha_bar_delta, data_gradient_coord, saga_coord_delta, sgd_coord_delta, svrg_coord_delta,
};

/// Default sparse-update stride for the shared iteration counter.
pub const DEFAULT_COUNTER_STRIDE: u64 = 100;

/// Window length, in iterations, for the overlap estimate.
pub const OVERLAP_WINDOW: usize = 100;

/// How shared coordinates are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteMode {
    /// Compare-and-swap read-modify-write: concurrent adds compose exactly.
    Atomic,
    /// Plain load-then-store. Loses updates under contention; exists only to
    /// demonstrate that the CAS is load-bearing. Never use it for results.
    Unsynchronized,
}

/// Read protocol of the ASAGA worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadMode {
    /// Sample `i` first, then read only the support coordinates, `α_i` and
    /// `[ᾱ]_{S_i}`; `ᾱ` is the maintained shared vector. This is the fast
    /// practical protocol (its read set depends on `i`).
    SampleFirst,
    /// Read all of `x` and all of `α` in fixed order, then sample `i` and
    /// recompute `[ᾱ]_{S_i}` from the `α` read. This is the analyzed
    /// protocol; it needs a column index and costs `O(n + d)` per iteration,
    /// so it is for desk-scale validation only.
    FullReadFirst,
}

/// A dense `f64` vector whose coordinates are individually atomic.
#[derive(Debug)]
pub struct AtomicF64Vec {
    bits: Vec<AtomicU64>,
}

impl AtomicF64Vec {
    pub fn zeros(len: usize) -> Self {
        let mut bits = Vec::with_capacity(len);
        bits.resize_with(len, || AtomicU64::new(0)); // 0u64 is +0.0
        Self { bits }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Self { bits: values.iter().map(|v| AtomicU64::new(v.to_bits())).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline(always)]
    pub fn load(&self, v: usize) -> f64 {
        f64::from_bits(self.bits[v].load(Ordering::Relaxed))
    }

    #[inline(always)]
    pub fn store(&self, v: usize, value: f64) {
        self.bits[v].store(value.to_bits(), Ordering::Relaxed);
    }

    /// Lost-update-free coordinate add: retries the compare-and-swap until
    /// this delta is composed with every concurrent one.
    #[inline]
    pub fn add(&self, v: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let cell = &self.bits[v];
        let mut current = cell.load(Ordering::Relaxed);
        loop {
            let next = (f64::from_bits(current) + delta).to_bits();
            match cell.compare_exchange_weak(current, next, Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => return,
                Err(seen) => {
                    current = seen;
                    core::hint::spin_loop();
                }
            }
        }
    }

    /// Plain read-add-write without the swap check. Test-only sabotage for
    /// demonstrating that lost updates stall convergence.
    #[inline]
    pub fn add_unsynchronized(&self, v: usize, delta: f64) {
        let current = self.load(v);
        self.store(v, current + delta);
    }

    #[inline]
    pub fn apply(&self, mode: WriteMode, v: usize, delta: f64) {
        match mode {
            WriteMode::Atomic => self.add(v, delta),
            WriteMode::Unsynchronized => self.add_unsynchronized(v, delta),
        }
    }

    /// Coordinate-by-coordinate copy. Inconsistent by design: the result may
    /// mix states when writers are active.
    pub fn snapshot(&self) -> Vec<f64> {
        (0..self.len()).map(|v| self.load(v)).collect()
    }

    pub fn load_into(&self, buf: &mut [f64]) {
        debug_assert_eq!(buf.len(), self.len());
        for (v, slot) in buf.iter_mut().enumerate() {
            *slot = self.load(v);
        }
    }

    pub fn copy_from_slice(&self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.len());
        for (v, value) in values.iter().enumerate() {
            self.store(v, *value);
        }
    }

    pub fn fill(&self, value: f64) {
        for cell in &self.bits {
            cell.store(value.to_bits(), Ordering::Relaxed);
        }
    }
}

/// The concurrently mutated triple of ASAGA plus the sparse iteration
/// counter. Constructed and torn down single-threaded; shared by reference
/// between workers while a run is in flight.
#[derive(Debug)]
pub struct SharedState {
    /// Iterate, one atomic per coordinate.
    pub x: AtomicF64Vec,
    /// Per-sample gradient scalars `σ_i`.
    pub alpha: AtomicF64Vec,
    /// Maintained running average `ᾱ = (1/n) Σ α_i·a_i`.
    pub alpha_bar: AtomicF64Vec,
    /// Global iteration label, advanced by `counter_stride` at a time.
    pub iter_counter: AtomicU64,
}

impl SharedState {
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            x: AtomicF64Vec::zeros(d),
            alpha: AtomicF64Vec::zeros(n),
            alpha_bar: AtomicF64Vec::zeros(d),
            iter_counter: AtomicU64::new(0),
        }
    }
}

/// Counter labels bracketing one iteration: `start_label` read before the
/// iteration's first shared read, `end_label` after its last write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapSample {
    pub start_label: u64,
    pub end_label: u64,
}

impl OverlapSample {
    #[inline]
    pub fn gap(&self) -> u64 {
        debug_assert!(self.end_label >= self.start_label);
        self.end_label - self.start_label
    }
}

/// Overlap estimation failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OverlapError {
    /// Fewer samples than one full window.
    NotEnoughSamples { have: usize, need: usize },
}

impl fmt::Display for OverlapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OverlapError::NotEnoughSamples { have, need } => {
                write!(f, "overlap estimation needs at least {need} samples, got {have}")
            }
        }
    }
}

impl core::error::Error for OverlapError {}

/// τ̂ from one worker's consecutive samples: the maximum over full
/// `window`-iteration windows of the window-mean label gap. Labels are in
/// iteration units (granular to the counter stride), so no rescaling is
/// needed; a trailing partial window is ignored. This is a lower bound on
/// the true maximum overlap, which is what makes it reportable.
pub fn estimate_overlap(samples: &[OverlapSample], window: usize) -> Result<f64, OverlapError> {
    let window = window.max(1);
    if samples.len() < window {
        return Err(OverlapError::NotEnoughSamples { have: samples.len(), need: window });
    }
    let mut best = 0.0f64;
    for chunk in samples.chunks_exact(window) {
        let sum: u64 = chunk.iter().map(OverlapSample::gap).sum();
        best = best.max(sum as f64 / window as f64);
    }
    Ok(best)
}

/// τ̂ across workers: the maximum of the per-worker window estimates.
pub fn estimate_overlap_multi(
    per_worker: &[Vec<OverlapSample>],
    window: usize,
) -> Result<f64, OverlapError> {
    let mut best: Option<f64> = None;
    let mut have = 0usize;
    for samples in per_worker {
        have = have.max(samples.len());
        if let Ok(tau) = estimate_overlap(samples, window) {
            best = Some(best.map_or(tau, |b: f64| b.max(tau)));
        }
    }
    best.ok_or(OverlapError::NotEnoughSamples { have, need: window.max(1) })
}

/// Per-feature view of the dataset: for each `v`, the samples containing it
/// and their values. Only the analyzed-read protocol needs this.
#[derive(Debug, Clone)]
pub struct ColumnIndex {
    indptr: Vec<usize>,
    samples: Vec<u32>,
    values: Vec<f64>,
}

impl ColumnIndex {
    pub fn build(data: &SparseDataset) -> Self {
        let d = data.dim();
        let mut counts = vec![0usize; d + 1];
        for i in 0..data.n() {
            let (idx, _) = data.row(i);
            for &v in idx {
                counts[v as usize + 1] += 1;
            }
        }
        for v in 0..d {
            counts[v + 1] += counts[v];
        }
        let indptr = counts.clone();
        let mut cursor = counts;
        let mut samples = vec![0u32; data.nnz()];
        let mut values = vec![0.0f64; data.nnz()];
        for i in 0..data.n() {
            let (idx, val) = data.row(i);
            for (&v, &a) in idx.iter().zip(val) {
                let slot = cursor[v as usize];
                samples[slot] = i as u32;
                values[slot] = a;
                cursor[v as usize] += 1;
            }
        }
        Self { indptr, samples, values }
    }

    #[inline]
    pub fn col(&self, v: usize) -> (&[u32], &[f64]) {
        let (lo, hi) = (self.indptr[v], self.indptr[v + 1]);
        (&self.samples[lo..hi], &self.values[lo..hi])
    }
}

/// Knobs of a worker loop.
#[derive(Debug, Clone, Copy)]
pub struct WorkerOptions {
    pub counter_stride: u64,
    pub write_mode: WriteMode,
    pub read_mode: ReadMode,
    pub collect_overlap: bool,
}

impl Default for WorkerOptions {
    fn default() -> Self {
        Self {
            counter_stride: DEFAULT_COUNTER_STRIDE,
            write_mode: WriteMode::Atomic,
            read_mode: ReadMode::SampleFirst,
            collect_overlap: false,
        }
    }
}

/// Bookkeeping shared by the worker loops: counter labels, sparse counter
/// bumps and overlap collection.
struct LoopMeter<'a> {
    counter: &'a AtomicU64,
    stride: u64,
    since_bump: u64,
    collect: bool,
    samples: Vec<OverlapSample>,
}

impl<'a> LoopMeter<'a> {
    fn new(counter: &'a AtomicU64, opts: &WorkerOptions) -> Self {
        Self {
            counter,
            stride: opts.counter_stride.max(1),
            since_bump: 0,
            collect: opts.collect_overlap,
            samples: Vec::new(),
        }
    }

    #[inline]
    fn start(&self) -> u64 {
        if self.collect {
            self.counter.load(Ordering::Relaxed)
        } else {
            0
        }
    }

    #[inline]
    fn finish(&mut self, start_label: u64) {
        if self.collect {
            let end_label = self.counter.load(Ordering::Relaxed);
            self.samples.push(OverlapSample { start_label, end_label });
        }
        self.since_bump += 1;
        if self.since_bump == self.stride {
            self.counter.fetch_add(self.stride, Ordering::Relaxed);
            self.since_bump = 0;
        }
    }

    fn into_samples(self) -> Vec<OverlapSample> {
        if self.since_bump > 0 {
            self.counter.fetch_add(self.since_bump, Ordering::Relaxed);
        }
        self.samples
    }
}

/// Run `iters` ASAGA iterations against the shared state.
///
/// Each iteration of the practical protocol: sample `i`; inconsistently
/// read `[x]_{S_i}`, `α_i`, `[ᾱ]_{S_i}`; compute the gradient-scalar delta
/// `δα = σ_i(x̂) − α̂_i`; then issue the three coordinate-wise shared
/// updates — `x`, the `α_i` scalar (by increment) and `ᾱ` — through the
/// configured write mode. Returns the collected overlap samples.
///
/// Shared-write audit: an ASAGA iteration touches shared memory at exactly
/// three sites, one per line of the update rule —
///
/// | update                          | site                                |
/// |---------------------------------|-------------------------------------|
/// | `[x]_v += [δx]_v`               | `shared.x.apply` in the support loop |
/// | `α_i += δα`                     | `shared.alpha.apply`, once          |
/// | `[ᾱ]_v += δα·[a_i]_v / n`       | `shared.alpha_bar.apply` loop       |
///
/// (the analyzed-read mode replaces the `α_i` increment with an overwrite
/// and does not maintain `ᾱ`). Anything else would either lose updates or
/// introduce synchronization the model forbids; keep it that way.
pub fn asaga_worker(
    obj: &Objective<'_>,
    shared: &SharedState,
    gamma: f64,
    iters: u64,
    opts: &WorkerOptions,
    column_index: Option<&ColumnIndex>,
    rng: &mut SplitMix64,
) -> Vec<OverlapSample> {
    match opts.read_mode {
        ReadMode::SampleFirst => asaga_worker_practical(obj, shared, gamma, iters, opts, rng),
        ReadMode::FullReadFirst => {
            let columns = column_index.expect("FullReadFirst requires a column index");
            asaga_worker_analyzed(obj, shared, gamma, iters, opts, columns, rng)
        }
    }
}

fn asaga_worker_practical(
    obj: &Objective<'_>,
    shared: &SharedState,
    gamma: f64,
    iters: u64,
    opts: &WorkerOptions,
    rng: &mut SplitMix64,
) -> Vec<OverlapSample> {
    let data = obj.data();
    let d_diag = &obj.profile().d_diag;
    let lambda = obj.lambda();
    let n = obj.n();
    let inv_n = 1.0 / n as f64;
    let mut meter = LoopMeter::new(&shared.iter_counter, opts);
    let mut xs: Vec<f64> = Vec::new();
    let mut abars: Vec<f64> = Vec::new();

    for _ in 0..iters {
        let start = meter.start();

        let i = rng.below(n);
        let (idx, val) = data.row(i);

        xs.clear();
        for &v in idx {
            xs.push(shared.x.load(v as usize));
        }
        let alpha_hat = shared.alpha.load(i);
        abars.clear();
        for &v in idx {
            abars.push(shared.alpha_bar.load(v as usize));
        }

        let mut margin = 0.0;
        for (&a, &xv) in val.iter().zip(&xs) {
            margin += a * xv;
        }
        let s = sigma(data.label(i), margin);
        let dalpha = s - alpha_hat;

        for (k, (&v, &a)) in idx.iter().zip(val).enumerate() {
            let v = v as usize;
            let delta = saga_coord_delta(gamma, dalpha, a, d_diag[v], abars[k], xs[k], lambda);
            shared.x.apply(opts.write_mode, v, delta);
        }
        shared.alpha.apply(opts.write_mode, i, dalpha);
        for (&v, &a) in idx.iter().zip(val) {
            shared.alpha_bar.apply(opts.write_mode, v as usize, alpha_bar_delta(dalpha, a, inv_n));
        }

        meter.finish(start);
    }
    meter.into_samples()
}

/// The analyzed protocol: full fixed-order reads of `x` and `α` before
/// sampling, `[ᾱ]_{S_i}` recomputed from the `α` read, and the memory
/// overwritten rather than incremented. Desk-scale validation only.
fn asaga_worker_analyzed(
    obj: &Objective<'_>,
    shared: &SharedState,
    gamma: f64,
    iters: u64,
    opts: &WorkerOptions,
    columns: &ColumnIndex,
    rng: &mut SplitMix64,
) -> Vec<OverlapSample> {
    let data = obj.data();
    let d_diag = &obj.profile().d_diag;
    let lambda = obj.lambda();
    let n = obj.n();
    let inv_n = 1.0 / n as f64;
    let mut meter = LoopMeter::new(&shared.iter_counter, opts);
    let mut x_hat = vec![0.0f64; obj.dim()];
    let mut alpha_hat = vec![0.0f64; n];

    for _ in 0..iters {
        let start = meter.start();

        shared.x.load_into(&mut x_hat);
        shared.alpha.load_into(&mut alpha_hat);
        let i = rng.below(n);
        let (idx, val) = data.row(i);

        let mut margin = 0.0;
        for (&v, &a) in idx.iter().zip(val) {
            margin += a * x_hat[v as usize];
        }
        let s = sigma(data.label(i), margin);
        let dalpha = s - alpha_hat[i];

        for (&v, &a) in idx.iter().zip(val) {
            let v = v as usize;
            let (col_samples, col_values) = columns.col(v);
            let mut abar_v = 0.0;
            for (&j, &ajv) in col_samples.iter().zip(col_values) {
                abar_v += alpha_hat[j as usize] * ajv;
            }
            abar_v *= inv_n;
            let delta = saga_coord_delta(gamma, dalpha, a, d_diag[v], abar_v, x_hat[v], lambda);
            shared.x.apply(opts.write_mode, v, delta);
        }
        shared.alpha.store(i, s);

        meter.finish(start);
    }
    meter.into_samples()
}

/// Run `iters` Hogwild iterations: a projected SGD step per sample with
/// atomic coordinate adds. No gradient memory is touched.
pub fn hogwild_worker(
    obj: &Objective<'_>,
    shared: &SharedState,
    gamma: f64,
    iters: u64,
    opts: &WorkerOptions,
    rng: &mut SplitMix64,
) -> Vec<OverlapSample> {
    let data = obj.data();
    let d_diag = &obj.profile().d_diag;
    let lambda = obj.lambda();
    let n = obj.n();
    let mut meter = LoopMeter::new(&shared.iter_counter, opts);
    let mut xs: Vec<f64> = Vec::new();

    for _ in 0..iters {
        let start = meter.start();

        let i = rng.below(n);
        let (idx, val) = data.row(i);
        xs.clear();
        for &v in idx {
            xs.push(shared.x.load(v as usize));
        }
        let mut margin = 0.0;
        for (&a, &xv) in val.iter().zip(&xs) {
            margin += a * xv;
        }
        let s = sigma(data.label(i), margin);

        for (k, (&v, &a)) in idx.iter().zip(val).enumerate() {
            let v = v as usize;
            let delta = sgd_coord_delta(gamma, s, a, d_diag[v], xs[k], lambda);
            shared.x.apply(opts.write_mode, v, delta);
        }

        meter.finish(start);
    }
    meter.into_samples()
}

/// Epoch phase label: synchronized reference computation.
pub const PHASE_SYNC: u64 = 0;
/// Epoch phase label: lock-free inner iterations.
pub const PHASE_INNER: u64 = 1;

/// Shared state of the asynchronous sparse SVRG engine: the iterate plus
/// the reference snapshot and its cached gradients, refreshed each epoch
/// under a barrier.
#[derive(Debug)]
pub struct KromagnonShared {
    pub x: AtomicF64Vec,
    pub x_ref: AtomicF64Vec,
    /// `σ_i(x̃)` for every sample.
    pub sigma_ref: AtomicF64Vec,
    /// Raw `Σ_i σ_i(x̃)·a_i` accumulator for the joint batch computation.
    pub grad_accum: AtomicF64Vec,
    /// Finalized data part of `∇f(x̃)`; the regularizer is applied fresh
    /// per inner step, so `λx̃` is deliberately not folded in.
    pub data_grad_ref: AtomicF64Vec,
    pub iter_counter: AtomicU64,
    /// [`PHASE_SYNC`] or [`PHASE_INNER`]; inner steps assert on it.
    pub phase: AtomicU64,
}

impl KromagnonShared {
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            x: AtomicF64Vec::zeros(d),
            x_ref: AtomicF64Vec::zeros(d),
            sigma_ref: AtomicF64Vec::zeros(n),
            grad_accum: AtomicF64Vec::zeros(d),
            data_grad_ref: AtomicF64Vec::zeros(d),
            iter_counter: AtomicU64::new(0),
            phase: AtomicU64::new(PHASE_SYNC),
        }
    }

    /// Freeze the current iterate as the new reference and reset the
    /// gradient accumulator. Call single-threaded (between barriers).
    pub fn begin_reference(&self) {
        self.phase.store(PHASE_SYNC, Ordering::Relaxed);
        for v in 0..self.x.len() {
            self.x_ref.store(v, self.x.load(v));
        }
        self.grad_accum.fill(0.0);
    }

    /// Finalize the batch term from the accumulator and open the inner
    /// phase. Call single-threaded, after every reference chunk has been
    /// added.
    pub fn finish_reference(&self, inv_n: f64) {
        for v in 0..self.data_grad_ref.len() {
            self.data_grad_ref.store(v, data_gradient_coord(self.grad_accum.load(v), inv_n));
        }
        self.phase.store(PHASE_INNER, Ordering::Relaxed);
    }
}

/// One worker's share of the joint reference computation: caches
/// `σ_i(x̃)` and adds this chunk's `σ_i(x̃)·a_i` terms into the accumulator.
/// `x_ref_scratch` must have length `d`; it receives a copy of the frozen
/// reference.
pub fn kromagnon_reference_chunk(
    obj: &Objective<'_>,
    shared: &KromagnonShared,
    samples: core::ops::Range<usize>,
    x_ref_scratch: &mut [f64],
) {
    shared.x_ref.load_into(x_ref_scratch);
    let data = obj.data();
    for i in samples {
        let s = obj.sigma_at(i, x_ref_scratch);
        shared.sigma_ref.store(i, s);
        let (idx, val) = data.row(i);
        for (&v, &a) in idx.iter().zip(val) {
            shared.grad_accum.add(v as usize, s * a);
        }
    }
}

/// Run `iters` lock-free SVRG inner iterations against the current
/// reference. Asserts the phase flag so a partially computed `∇f(x̃)` can
/// never be consumed.
pub fn kromagnon_inner_worker(
    obj: &Objective<'_>,
    shared: &KromagnonShared,
    gamma: f64,
    iters: u64,
    opts: &WorkerOptions,
    rng: &mut SplitMix64,
) -> Vec<OverlapSample> {
    let data = obj.data();
    let d_diag = &obj.profile().d_diag;
    let lambda = obj.lambda();
    let n = obj.n();
    let mut meter = LoopMeter::new(&shared.iter_counter, opts);
    let mut xs: Vec<f64> = Vec::new();

    for _ in 0..iters {
        assert_eq!(
            shared.phase.load(Ordering::Relaxed),
            PHASE_INNER,
            "inner step outside the inner phase"
        );
        let start = meter.start();

        let i = rng.below(n);
        let (idx, val) = data.row(i);
        xs.clear();
        for &v in idx {
            xs.push(shared.x.load(v as usize));
        }
        let mut margin = 0.0;
        for (&a, &xv) in val.iter().zip(&xs) {
            margin += a * xv;
        }
        let dsigma = sigma(data.label(i), margin) - shared.sigma_ref.load(i);

        for (k, (&v, &a)) in idx.iter().zip(val).enumerate() {
            let v = v as usize;
            let delta = svrg_coord_delta(
                gamma,
                dsigma,
                a,
                d_diag[v],
                shared.data_grad_ref.load(v),
                xs[k],
                lambda,
            );
            shared.x.apply(opts.write_mode, v, delta);
        }

        meter.finish(start);
    }
    meter.into_samples()
}
