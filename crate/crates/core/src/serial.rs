//! Single-threaded reference solvers.
//!
//! These are the ground truth the lock-free engine is validated against:
//! constant-step SGD, dense SAGA, Sparse SAGA, lagged-update SAGA and
//! epoch-based sparse SVRG. All of them
//!
//! * sample uniformly with replacement from a [`SplitMix64`] stream,
//! * store gradient memory as one scalar `σ_i` per sample,
//! * apply the regularizer freshly each step, projected as `λ·D_i x`
//!   (so every method shares the same per-iteration sparsity cost and the
//!   same unbiasedness structure).
//!
//! SAGA's scalar memory is updated by increment (`α_i += σ − α̂_i`) rather
//! than overwrite; serially the two coincide up to one rounding, and the
//! increment form is exactly what the lock-free engine executes, which makes
//! one-worker parallel runs replay these solvers bit-for-bit.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::objective::Objective;
use crate::rng::SplitMix64;
use crate::updates::{
    alpha_bar_delta, saga_coord_delta, sgd_coord_delta, svrg_coord_delta,
};

/// Solver identifier, shared by the serial and asynchronous engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sgd,
    Saga,
    SparseSaga,
    LaggedSaga,
    Svrg,
    Asaga,
    Hogwild,
    Kromagnon,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Sgd,
        Method::Saga,
        Method::SparseSaga,
        Method::LaggedSaga,
        Method::Svrg,
        Method::Asaga,
        Method::Hogwild,
        Method::Kromagnon,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sgd => "sgd",
            Method::Saga => "saga",
            Method::SparseSaga => "sparse-saga",
            Method::LaggedSaga => "lagged-saga",
            Method::Svrg => "svrg",
            Method::Asaga => "asaga",
            Method::Hogwild => "hogwild",
            Method::Kromagnon => "kromagnon",
        }
    }

    /// True for the single-threaded methods.
    pub fn is_serial(&self) -> bool {
        !matches!(self, Method::Asaga | Method::Hogwild | Method::Kromagnon)
    }

    /// The serial method an asynchronous one reduces to with one worker.
    pub fn serial_counterpart(&self) -> Method {
        match self {
            Method::Asaga => Method::SparseSaga,
            Method::Hogwild => Method::Sgd,
            Method::Kromagnon => Method::Svrg,
            other => *other,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or(UnknownMethod)
    }
}

/// Unrecognized method name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownMethod;

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown method (expected one of: ")?;
        for (k, m) in Method::ALL.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            f.write_str(m.as_str())?;
        }
        f.write_str(")")
    }
}

impl core::error::Error for UnknownMethod {}

/// Run parameters shared by all solvers. `gamma` is the one real tunable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Constant step size.
    pub gamma: f64,
    /// Pass budget: the run executes `epochs · n` sampled steps.
    pub epochs: u64,
    /// Sampler seed; fixing it makes serial runs bit-reproducible.
    pub seed: u64,
    /// Optional early stop once the recorded suboptimality falls below this.
    pub target_subopt: Option<f64>,
    /// Trace sampling stride in iterations.
    pub record_every: u64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.gamma > 0.0) {
            return Err(SolverError::InvalidConfig("step size must be positive"));
        }
        if self.epochs == 0 {
            return Err(SolverError::InvalidConfig("epoch budget must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(SolverError::InvalidConfig("record stride must be at least 1"));
        }
        Ok(())
    }
}

/// Mutable solver state: iterate, scalar gradient memory and its running
/// average `ᾱ = (1/n) Σ_i α_i·a_i`, maintained incrementally.
#[derive(Debug, Clone, PartialEq)]
pub struct SerialState {
    pub x: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

impl SerialState {
    /// Fresh state: `x = 0`, `α ≡ 0`, `ᾱ = 0`.
    pub fn zeros(n: usize, d: usize) -> Self {
        Self { x: vec![0.0; d], alpha: vec![0.0; n], alpha_bar: vec![0.0; d] }
    }

    /// Recompute `ᾱ` from scratch out of the scalar memory. Used to check
    /// the incrementally maintained copy.
    pub fn recompute_alpha_bar(&self, obj: &Objective<'_>) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.x.len()];
        for i in 0..self.alpha.len() {
            let (idx, val) = obj.data().row(i);
            for (&v, &a) in idx.iter().zip(val) {
                acc[v as usize] += self.alpha[i] * a;
            }
        }
        let inv_n = 1.0 / self.alpha.len() as f64;
        for a in &mut acc {
            *a *= inv_n;
        }
        acc
    }
}

/// Per-coordinate last-materialized counters for the lagged variant.
#[derive(Debug, Clone)]
pub struct LagTracker {
    counters: Vec<u64>,
}

impl LagTracker {
    pub fn new(d: usize) -> Self {
        Self { counters: vec![0; d] }
    }

    pub fn counters(&self) -> &[u64] {
        &self.counters
    }
}

/// One projected SGD step on sample `i`:
/// `[x]_v ← [x]_v − γ(σ_i·a_v + λ·d_v·x_v)` for `v ∈ S_i`.
pub fn sgd_step(obj: &Objective<'_>, state: &mut SerialState, i: usize, gamma: f64) {
    let sigma = obj.sigma_at(i, &state.x);
    let (idx, val) = obj.data().row(i);
    let d_diag = &obj.profile().d_diag;
    let lambda = obj.lambda();
    for (&v, &a) in idx.iter().zip(val) {
        let v = v as usize;
        state.x[v] += sgd_coord_delta(gamma, sigma, a, d_diag[v], state.x[v], lambda);
    }
}

/// One dense SAGA step on sample `i`: every coordinate moves by
/// `−γ((σ − α_i)·a_v + ᾱ_v + λ·x_v)` (the data term vanishing off the
/// support), then the scalar memory and `ᾱ` are updated.
pub fn saga_dense_step(obj: &Objective<'_>, state: &mut SerialState, i: usize, gamma: f64) {
    let sigma = obj.sigma_at(i, &state.x);
    let dalpha = sigma - state.alpha[i];
    let (idx, val) = obj.data().row(i);
    let lambda = obj.lambda();

    let mut k = 0usize;
    for v in 0..state.x.len() {
        let (da, a) = if k < idx.len() && idx[k] as usize == v {
            k += 1;
            (dalpha, val[k - 1])
        } else {
            (0.0, 0.0)
        };
        state.x[v] += saga_coord_delta(gamma, da, a, 1.0, state.alpha_bar[v], state.x[v], lambda);
    }

    state.alpha[i] += dalpha;
    let inv_n = 1.0 / obj.n() as f64;
    for (&v, &a) in idx.iter().zip(val) {
        state.alpha_bar[v as usize] += alpha_bar_delta(dalpha, a, inv_n);
    }
}

/// One Sparse SAGA step on sample `i`: only `v ∈ S_i` change, by
/// `−γ((σ − α_i)·a_v + d_v·ᾱ_v + λ·d_v·x_v)`.
pub fn saga_sparse_step(obj: &Objective<'_>, state: &mut SerialState, i: usize, gamma: f64) {
    let sigma = obj.sigma_at(i, &state.x);
    let dalpha = sigma - state.alpha[i];
    let (idx, val) = obj.data().row(i);
    let d_diag = &obj.profile().d_diag;
    let lambda = obj.lambda();

    for (&v, &a) in idx.iter().zip(val) {
        let v = v as usize;
        state.x[v] +=
            saga_coord_delta(gamma, dalpha, a, d_diag[v], state.alpha_bar[v], state.x[v], lambda);
    }

    state.alpha[i] += dalpha;
    let inv_n = 1.0 / obj.n() as f64;
    for (&v, &a) in idx.iter().zip(val) {
        state.alpha_bar[v as usize] += alpha_bar_delta(dalpha, a, inv_n);
    }
}

/// Bring coordinate `v` up to date with the dense-SAGA trajectory at
/// iteration `target_t`, applying the `k = target_t − c_v` deferred
/// off-support steps `x_v ← (1−γλ)·x_v − γ·ᾱ_v` in closed form.
///
/// `ᾱ_v` is constant over the deferred window — it only changes when `v` is
/// in a sampled support, at which point the coordinate is materialized
/// first — so the geometric-series form is exact up to rounding. A single
/// deferred step is applied literally, which keeps a flush-every-step run
/// bit-identical to dense SAGA.
#[inline]
fn catch_up_coord(
    state: &mut SerialState,
    lag: &mut LagTracker,
    v: usize,
    target_t: u64,
    gamma: f64,
    lambda: f64,
) {
    let k = target_t - lag.counters[v];
    if k == 0 {
        return;
    }
    if k == 1 {
        state.x[v] +=
            saga_coord_delta(gamma, 0.0, 0.0, 1.0, state.alpha_bar[v], state.x[v], lambda);
    } else {
        let contraction = 1.0 - gamma * lambda;
        let ck = math::pow_u64(contraction, k);
        state.x[v] = ck * state.x[v] - state.alpha_bar[v] * ((1.0 - ck) / lambda);
    }
    lag.counters[v] = target_t;
}

/// One lagged-update SAGA step: materialize the support coordinates, then
/// perform the dense-SAGA support update. `t` is the 1-based index of this
/// step; all counters must be `≤ t − 1`.
///
/// The lagged variant is serial-only, deliberately. Porting it to the
/// lock-free engine runs into four obstacles: concurrent catch-ups of the
/// same coordinate compose additively and over-correct; the triplet
/// `(x_v, c_v, ᾱ_v)` would need to be read and written atomically as a
/// unit; the scheme requires an explicit global step counter on the hot
/// path; and the deferred multiplier `t − c_v` is a per-coordinate constant
/// where the truly asynchronous execution applies a random per-coordinate
/// number of updates, so the parallel "lagged" algorithm would not even
/// coincide with the dense one it is meant to emulate.
pub fn saga_lagged_step(
    obj: &Objective<'_>,
    state: &mut SerialState,
    lag: &mut LagTracker,
    i: usize,
    gamma: f64,
    t: u64,
) {
    let (idx, val) = obj.data().row(i);
    let lambda = obj.lambda();
    for &v in idx {
        debug_assert!(lag.counters[v as usize] < t);
        catch_up_coord(state, lag, v as usize, t - 1, gamma, lambda);
    }

    let sigma = obj.sigma_at(i, &state.x);
    let dalpha = sigma - state.alpha[i];
    for (&v, &a) in idx.iter().zip(val) {
        let v = v as usize;
        state.x[v] +=
            saga_coord_delta(gamma, dalpha, a, 1.0, state.alpha_bar[v], state.x[v], lambda);
        lag.counters[v] = t;
    }

    state.alpha[i] += dalpha;
    let inv_n = 1.0 / obj.n() as f64;
    for (&v, &a) in idx.iter().zip(val) {
        state.alpha_bar[v as usize] += alpha_bar_delta(dalpha, a, inv_n);
    }
}

/// Apply every outstanding deferred correction so `x` equals the dense-SAGA
/// iterate after `t` steps and all counters equal `t`.
pub fn flush_lag(state: &mut SerialState, lag: &mut LagTracker, gamma: f64, lambda: f64, t: u64) {
    for v in 0..state.x.len() {
        catch_up_coord(state, lag, v, t, gamma, lambda);
    }
}

/// Cached reference point for SVRG: the anchor iterate, its per-sample
/// gradient scalars and the data part of its batch gradient. The batch term
/// deliberately excludes `λx̃`: the regularizer is applied fresh each inner
/// step as `λ·D_i x`, which is what keeps the inner update unbiased.
#[derive(Debug, Clone)]
pub struct SvrgReference {
    pub x_ref: Vec<f64>,
    pub sigma_ref: Vec<f64>,
    pub data_grad_ref: Vec<f64>,
}

impl SvrgReference {
    pub fn new(obj: &Objective<'_>, x: &[f64]) -> Self {
        let sigma_ref: Vec<f64> = (0..obj.n()).map(|i| obj.sigma_at(i, x)).collect();
        Self { x_ref: x.to_vec(), sigma_ref, data_grad_ref: obj.data_gradient(x) }
    }
}

/// One sparse SVRG inner step on sample `i`:
/// `[x]_v ← [x]_v − γ((σ_i(x) − σ_i(x̃))·a_v + d_v·[∇f(x̃)]_v + λ·d_v·x_v)`.
pub fn svrg_step(
    obj: &Objective<'_>,
    x: &mut [f64],
    reference: &SvrgReference,
    i: usize,
    gamma: f64,
) {
    let dsigma = obj.sigma_at(i, x) - reference.sigma_ref[i];
    let (idx, val) = obj.data().row(i);
    let d_diag = &obj.profile().d_diag;
    let lambda = obj.lambda();
    for (&v, &a) in idx.iter().zip(val) {
        let v = v as usize;
        x[v] += svrg_coord_delta(
            gamma,
            dsigma,
            a,
            d_diag[v],
            reference.data_grad_ref[v],
            x[v],
            lambda,
        );
    }
}

/// `m` SVRG inner steps against a fixed reference, sampling from `rng`.
pub fn svrg_epoch(
    obj: &Objective<'_>,
    x: &mut [f64],
    reference: &SvrgReference,
    gamma: f64,
    m: u64,
    rng: &mut SplitMix64,
) {
    for _ in 0..m {
        let i = rng.below(obj.n());
        svrg_step(obj, x, reference, i, gamma);
    }
}

/// A trace sample: suboptimality `f(x_t) − f(x*)` at iteration `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordPoint {
    pub iteration: u64,
    pub suboptimality: f64,
}

/// Solver failure.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    InvalidConfig(&'static str),
    /// Suboptimality exceeded `1e8 ×` its initial value (or went
    /// non-finite). The run aborts instead of emitting garbage records.
    Diverged { iteration: u64, suboptimality: f64, initial: f64 },
    /// `run_serial` was asked to run an asynchronous method.
    NotSerial(Method),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::InvalidConfig(msg) => write!(f, "invalid solver config: {msg}"),
            SolverError::Diverged { iteration, suboptimality, initial } => write!(
                f,
                "divergence detected at iteration {iteration}: suboptimality {suboptimality:e} \
                 from initial {initial:e}"
            ),
            SolverError::NotSerial(m) => {
                write!(f, "method {m} is asynchronous; use the parallel engine")
            }
        }
    }
}

impl core::error::Error for SolverError {}

/// Growth factor over the initial suboptimality that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e8;

/// Run a serial method for `epochs · n` uniformly sampled steps.
///
/// `on_record` is invoked with the initial point, every `record_every`
/// iterations, and at the final iteration; `f_star` anchors the reported
/// suboptimality. For SVRG the reference is rebuilt every `svrg_m` inner
/// steps (default `n`). Two runs with the same inputs produce bit-identical
/// iterate sequences.
///
/// Returns the final iterate.
pub fn run_serial<F>(
    method: Method,
    obj: &Objective<'_>,
    config: &SolverConfig,
    f_star: f64,
    svrg_m: Option<u64>,
    mut on_record: F,
) -> Result<Vec<f64>, SolverError>
where
    F: FnMut(RecordPoint),
{
    if !method.is_serial() {
        return Err(SolverError::NotSerial(method));
    }
    config.validate()?;

    let n = obj.n();
    let total = config.epochs * n as u64;
    let gamma = config.gamma;
    let mut rng = SplitMix64::stream(config.seed, 0);
    let mut state = SerialState::zeros(n, obj.dim());
    let mut lag = LagTracker::new(obj.dim());
    let m = svrg_m.unwrap_or(n as u64).max(1);
    let mut reference: Option<SvrgReference> = None;
    let mut round_left = 0u64;

    let initial = obj.loss(&state.x) - f_star;
    let guard = DIVERGENCE_FACTOR * math::abs(initial).max(1e-8);
    on_record(RecordPoint { iteration: 0, suboptimality: initial });

    let mut t: u64 = 0;
    while t < total {
        if method == Method::Svrg && round_left == 0 {
            reference = Some(SvrgReference::new(obj, &state.x));
            round_left = m;
        }

        let i = rng.below(n);
        t += 1;
        match method {
            Method::Sgd => sgd_step(obj, &mut state, i, gamma),
            Method::Saga => saga_dense_step(obj, &mut state, i, gamma),
            Method::SparseSaga => saga_sparse_step(obj, &mut state, i, gamma),
            Method::LaggedSaga => saga_lagged_step(obj, &mut state, &mut lag, i, gamma, t),
            Method::Svrg => {
                let r = reference.as_ref().expect("reference built above");
                svrg_step(obj, &mut state.x, r, i, gamma);
                round_left -= 1;
            }
            _ => unreachable!("serial methods only"),
        }

        if t % config.record_every == 0 || t == total {
            if method == Method::LaggedSaga {
                flush_lag(&mut state, &mut lag, gamma, obj.lambda(), t);
            }
            let subopt = obj.loss(&state.x) - f_star;
            if !subopt.is_finite() || subopt > guard {
                return Err(SolverError::Diverged { iteration: t, suboptimality: subopt, initial });
            }
            on_record(RecordPoint { iteration: t, suboptimality: subopt });
            if let Some(target) = config.target_subopt {
                if subopt <= target {
                    break;
                }
            }
        }
    }

    if method == Method::LaggedSaga {
        flush_lag(&mut state, &mut lag, gamma, obj.lambda(), t);
    }
    Ok(state.x)
}
