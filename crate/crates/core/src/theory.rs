//! Closed-form rate and step-size expressions, used for defaults and
//! reporting.
//!
//! With `γ = a/(5L)`, `a ≤ 1`, serial (Sparse) SAGA contracts in
//! expectation with rate factor at least `ρ(a) = (1/5)·min(1/n, a/κ)` per
//! update. The asynchronous engine keeps that rate provided the step-size
//! multiplier stays below
//!
//! ```text
//! a*(τ) = 1 / (32 (1 + τ√Δ) ξ(κ, Δ, τ)),
//! ξ(κ, Δ, τ) = √(1 + (1/(8κ))·min(1/√Δ, τ)),
//! ```
//!
//! where τ bounds how many iterations can overlap. A linear speedup over
//! the serial solver is possible while `τ ≲ n` and
//! `τ ≲ (1/√Δ)·max(1, n/κ)`; the unspecified constants are taken as 1 and
//! the raw bounds are reported rather than hard-enforced.

use core::fmt;

use crate::math;

/// Theory-side summary for a given problem and overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Geometric rate factor per update.
    pub rho: f64,
    /// Maximum safe step-size multiplier, `γ = a*(τ)/L`.
    pub a_star: f64,
    /// The `ξ(κ, Δ, τ)` correction (≈ 1 unless `κ < 1/√Δ`).
    pub xi: f64,
    /// `n > κ` is the well-conditioned regime, `κ > n` the ill-conditioned.
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    WellConditioned,
    IllConditioned,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::WellConditioned => "well-conditioned",
            Regime::IllConditioned => "ill-conditioned",
        })
    }
}

/// Domain error for the closed-form evaluators.
#[derive(Debug, Clone, PartialEq)]
pub enum TheoryError {
    /// `a` must lie in `(0, 1]` for the serial rate.
    StepMultiplierOutOfRange { a: f64 },
    /// `Δ` must lie in `[1/n, 1]`.
    InvalidSparsity { delta: f64 },
    /// `κ ≥ 1`, `n ≥ 1`, `τ ≥ 0`.
    InvalidArgument(&'static str),
}

impl fmt::Display for TheoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoryError::StepMultiplierOutOfRange { a } => {
                write!(f, "step multiplier a must be in (0, 1], got {a}")
            }
            TheoryError::InvalidSparsity { delta } => {
                write!(f, "sparsity Δ must be in [1/n, 1], got {delta}")
            }
            TheoryError::InvalidArgument(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for TheoryError {}

/// `ρ(a) = (1/5)·min(1/n, a/κ)` for `γ = a/(5L)`, `a ≤ 1`.
pub fn serial_rate(n: u64, kappa: f64, a: f64) -> Result<f64, TheoryError> {
    if n == 0 || !(kappa >= 1.0) {
        return Err(TheoryError::InvalidArgument("need n ≥ 1 and κ ≥ 1"));
    }
    if !(a >= 0.0) || a > 1.0 {
        return Err(TheoryError::StepMultiplierOutOfRange { a });
    }
    Ok(f64::min(1.0 / n as f64, a / kappa) / 5.0)
}

/// `ξ(κ, Δ, τ) = √(1 + (1/(8κ))·min(1/√Δ, τ))`.
pub fn xi(kappa: f64, delta: f64, tau: f64) -> f64 {
    math::sqrt(1.0 + f64::min(1.0 / math::sqrt(delta), tau) / (8.0 * kappa))
}

/// Maximum step-size multiplier `a*(τ) = 1/(32(1 + τ√Δ)·ξ(κ, Δ, τ))`.
///
/// Callers must separately check `τ < n/10` (see [`speedup_condition`]);
/// convergence still holds beyond it but with much worse constants, so the
/// CLI warns rather than fails there.
pub fn asaga_stepsize(tau: f64, delta: f64, kappa: f64) -> Result<f64, TheoryError> {
    if !(tau >= 0.0) {
        return Err(TheoryError::InvalidArgument("overlap τ must be non-negative"));
    }
    if !(kappa >= 1.0) {
        return Err(TheoryError::InvalidArgument("condition number κ must be ≥ 1"));
    }
    if !(delta > 0.0) || delta > 1.0 {
        return Err(TheoryError::InvalidSparsity { delta });
    }
    Ok(1.0 / (32.0 * (1.0 + tau * math::sqrt(delta)) * xi(kappa, delta, tau)))
}

/// Raw speedup-condition bounds with unit constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupCondition {
    /// `n/10`, the overlap bound the convergence guarantee assumes.
    pub bound_n: f64,
    /// `(1/√Δ)·max(1, n/κ)`.
    pub bound_sparsity: f64,
    /// τ is below `bound_n`.
    pub holds_n: bool,
    /// τ is below `bound_sparsity`.
    pub holds_sparsity: bool,
}

impl SpeedupCondition {
    /// Both conditions hold, so a linear speedup is theoretically possible.
    pub fn holds(&self) -> bool {
        self.holds_n && self.holds_sparsity
    }
}

/// Evaluate the linear-speedup conditions for overlap `τ`.
pub fn speedup_condition(
    tau: f64,
    n: u64,
    kappa: f64,
    delta: f64,
) -> Result<SpeedupCondition, TheoryError> {
    if n == 0 || !(kappa >= 1.0) || !(tau >= 0.0) {
        return Err(TheoryError::InvalidArgument("need n ≥ 1, κ ≥ 1, τ ≥ 0"));
    }
    if !(delta > 0.0) || delta > 1.0 {
        return Err(TheoryError::InvalidSparsity { delta });
    }
    let bound_n = n as f64 / 10.0;
    let bound_sparsity = f64::max(1.0, n as f64 / kappa) / math::sqrt(delta);
    Ok(SpeedupCondition {
        bound_n,
        bound_sparsity,
        holds_n: tau < bound_n,
        holds_sparsity: tau < bound_sparsity,
    })
}

/// Bundle the theory quantities for reporting.
pub fn rate_estimate(n: u64, kappa: f64, delta: f64, tau: f64) -> Result<RateEstimate, TheoryError> {
    let a_star = asaga_stepsize(tau, delta, kappa)?;
    let rho = serial_rate(n, kappa, a_star)?;
    Ok(RateEstimate {
        rho,
        a_star,
        xi: xi(kappa, delta, tau),
        regime: if n as f64 > kappa { Regime::WellConditioned } else { Regime::IllConditioned },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_rate_reference_point() {
        assert_eq!(serial_rate(10, 5.0, 1.0).unwrap(), 1.0 / 50.0);
    }

    #[test]
    fn serial_rate_big_data_branch() {
        // Huge n: the 1/n branch wins regardless of a.
        let rho = serial_rate(1_000_000, 2.0, 1.0).unwrap();
        assert_eq!(rho, 1.0 / 5_000_000.0);
    }

    #[test]
    fn serial_rate_zero_step_is_zero() {
        assert_eq!(serial_rate(10, 5.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn serial_rate_rejects_a_above_one() {
        assert!(matches!(
            serial_rate(10, 5.0, 1.5),
            Err(TheoryError::StepMultiplierOutOfRange { .. })
        ));
    }

    #[test]
    fn stepsize_at_zero_overlap_is_exactly_one_32th() {
        for &(delta, kappa) in &[(1.0, 1.0), (0.5, 10.0), (1e-6, 1e6), (0.01, 3.0)] {
            assert_eq!(asaga_stepsize(0.0, delta, kappa).unwrap(), 1.0 / 32.0);
        }
    }

    #[test]
    fn stepsize_dense_tau_ten() {
        // Δ=1, τ=10: a* = 1/(352·√(1 + 10/(8κ)·min(1,10)=1... )) with
        // min(1/√Δ, τ) = 1.
        for &kappa in &[1.0, 4.0, 100.0] {
            let expect = 1.0 / (352.0 * (1.0f64 + 1.0 / (8.0 * kappa)).sqrt());
            let got = asaga_stepsize(10.0, 1.0, kappa).unwrap();
            assert!((got - expect).abs() < 1e-15, "kappa={kappa}: {got} vs {expect}");
        }
    }

    #[test]
    fn stepsize_rejects_bad_sparsity() {
        assert!(asaga_stepsize(1.0, 0.0, 2.0).is_err());
        assert!(asaga_stepsize(1.0, 1.5, 2.0).is_err());
    }

    #[test]
    fn speedup_condition_zero_overlap_always_holds() {
        let c = speedup_condition(0.0, 100, 10.0, 0.25).unwrap();
        assert!(c.holds());
    }

    #[test]
    fn speedup_condition_dense_well_conditioned() {
        // Δ=1, n ≫ κ: the sparsity bound reduces to n/κ, so a linear
        // speedup is possible without any sparsity.
        let c = speedup_condition(5.0, 10_000, 10.0, 1.0).unwrap();
        assert_eq!(c.bound_sparsity, 1000.0);
        assert!(c.holds());
    }

    #[test]
    fn speedup_condition_ill_conditioned_best_case() {
        // κ > n and Δ = 1/n: the bound collapses to √n.
        let n = 10_000u64;
        let c = speedup_condition(0.0, n, 2.0 * n as f64, 1.0 / n as f64).unwrap();
        assert!((c.bound_sparsity - (n as f64).sqrt()).abs() < 1e-9);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn stepsize_strictly_decreasing_in_tau(
                n in 2u64..1_000_000,
                kappa in 1.0f64..1e6,
                tau in 0.0f64..1e3,
                gap in 0.01f64..100.0,
            ) {
                let delta_lo = 1.0 / n as f64;
                let delta = delta_lo + (1.0 - delta_lo) * 0.37;
                let a1 = asaga_stepsize(tau, delta, kappa).unwrap();
                let a2 = asaga_stepsize(tau + gap, delta, kappa).unwrap();
                prop_assert!(a2 < a1, "a*({}) = {} !< a*({}) = {}", tau + gap, a2, tau, a1);
            }

            #[test]
            fn stepsize_bounds(
                tau in 0.0f64..1e4,
                kappa in 1.0f64..1e8,
                delta in 1e-9f64..1.0,
            ) {
                let a = asaga_stepsize(tau, delta, kappa).unwrap();
                prop_assert!(a > 0.0);
                prop_assert!(a <= 1.0 / 32.0);
                prop_assert!(xi(kappa, delta, tau) >= 1.0);
            }

            #[test]
            fn serial_rate_valid_range(
                n in 1u64..1_000_000,
                kappa in 1.0f64..1e8,
                a in 0.0f64..=1.0,
            ) {
                let rho = serial_rate(n, kappa, a).unwrap();
                prop_assert!(rho >= 0.0);
                prop_assert!(rho < 1.0);
                // Monotone in a until the 1/n branch caps it.
                let rho2 = serial_rate(n, kappa, (a * 0.5).min(1.0)).unwrap();
                prop_assert!(rho2 <= rho);
            }

            #[test]
            fn universal_stepsize_region(
                kappa in 1.0f64..1e6,
                delta in 1e-8f64..1.0,
                frac in 0.0f64..=1.0,
            ) {
                // For τ ≤ 1/√Δ, a*(τ) keeps a τ-independent floor:
                // a* ≥ 1/(64·√(1 + (1/(8κ))·(1/√Δ))).
                let tau = frac / delta.sqrt();
                let a = asaga_stepsize(tau, delta, kappa).unwrap();
                let floor = 1.0 / (64.0 * (1.0 + (1.0 / (8.0 * kappa)) / delta.sqrt()).sqrt());
                prop_assert!(a >= floor * (1.0 - 1e-12), "a = {}, floor = {}", a, floor);
            }
        }
    }
}
