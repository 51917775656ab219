//! Single source of truth for the per-coordinate update arithmetic.
//!
//! The serial solvers and the lock-free workers must produce bit-identical
//! trajectories when a parallel run uses one worker, so every variant
//! evaluates its coordinate delta through the same expression tree. Keep
//! these `#[inline(always)]` and do not reassociate the operands.

/// SAGA coordinate delta on the support:
/// `−γ((σ − α_i)·a_v + d_v·ᾱ_v + λ·d_v·x_v)`.
///
/// Dense SAGA is the `d_v = 1` case (applied to every coordinate, with
/// `dalpha·a_v = 0` off the support).
#[inline(always)]
pub(crate) fn saga_coord_delta(
    gamma: f64,
    dalpha: f64,
    a_v: f64,
    d_v: f64,
    abar_v: f64,
    x_v: f64,
    lambda: f64,
) -> f64 {
    -(gamma * (dalpha * a_v + d_v * abar_v + lambda * (d_v * x_v)))
}

/// Projected SGD coordinate delta: `−γ(σ·a_v + λ·d_v·x_v)`.
#[inline(always)]
pub(crate) fn sgd_coord_delta(
    gamma: f64,
    sigma: f64,
    a_v: f64,
    d_v: f64,
    x_v: f64,
    lambda: f64,
) -> f64 {
    -(gamma * (sigma * a_v + lambda * (d_v * x_v)))
}

/// Sparse SVRG inner-step coordinate delta:
/// `−γ((σ − σ̃)·a_v + d_v·g̃_v + λ·d_v·x_v)`.
#[inline(always)]
pub(crate) fn svrg_coord_delta(
    gamma: f64,
    dsigma: f64,
    a_v: f64,
    d_v: f64,
    gref_v: f64,
    x_v: f64,
    lambda: f64,
) -> f64 {
    -(gamma * (dsigma * a_v + d_v * gref_v + lambda * (d_v * x_v)))
}

/// Increment to the running gradient average: `(σ − α_i)·a_v / n`.
#[inline(always)]
pub(crate) fn alpha_bar_delta(dalpha: f64, a_v: f64, inv_n: f64) -> f64 {
    dalpha * a_v * inv_n
}

/// Final full-gradient coordinate: `acc_v / n + λ·x_v` where `acc_v` is the
/// accumulated `Σ_i σ_i·a_iv`.
#[inline(always)]
pub(crate) fn full_gradient_coord(acc_v: f64, inv_n: f64, lambda: f64, x_v: f64) -> f64 {
    acc_v * inv_n + lambda * x_v
}

/// Data-only gradient coordinate: `acc_v / n`. This is the SVRG batch term;
/// the regularizer is applied fresh per inner step, projected on the support,
/// so folding `λx̃` in here would bias the update.
#[inline(always)]
pub(crate) fn data_gradient_coord(acc_v: f64, inv_n: f64) -> f64 {
    acc_v * inv_n
}
