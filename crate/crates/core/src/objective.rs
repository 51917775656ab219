//! L2-regularized logistic regression: loss, scalar-compressed gradients,
//! full gradients and a high-precision reference optimum.
//!
//! For linear predictors the data part of the per-sample gradient is a
//! scalar multiple of the sample: `f_i'(x) = σ_i(x)·a_i + λx` with
//! `σ_i(x) = −b_i / (1 + exp(b_i·a_iᵀx))`. All solvers store the gradient
//! memory as that scalar, which keeps SAGA's memory at `n` floats.
//!
//! The regularizer is never folded into the scalar memory: every update
//! applies it fresh, projected onto the sampled support as `λ·D_i x`, which
//! keeps sparse updates unbiased.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{DataError, SparseDataset, SparsityProfile};
use crate::math;
use crate::updates::full_gradient_coord;

/// The regularized logistic objective over a dataset, with the sparsity
/// profile it shares with the solvers.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    data: &'a SparseDataset,
    profile: &'a SparsityProfile,
    lambda: f64,
}

/// Failure to build a logistic objective.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveError {
    InvalidRegularization { lambda: f64 },
    ProfileMismatch,
}

impl fmt::Display for ObjectiveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveError::InvalidRegularization { lambda } => {
                write!(f, "regularization weight must be positive, got {lambda}")
            }
            ObjectiveError::ProfileMismatch => {
                write!(f, "sparsity profile dimension does not match dataset")
            }
        }
    }
}

impl core::error::Error for ObjectiveError {}

/// `σ(b, m) = −b / (1 + e^{b·m})` for margin `m = aᵀx`.
///
/// Saturates to `−b` (respectively 0) for extreme margins without ever
/// producing a non-finite value for finite inputs.
#[inline(always)]
pub fn sigma(label: f64, margin: f64) -> f64 {
    -label / (1.0 + math::exp(label * margin))
}

/// Margin `a_iᵀx` of a sparse row against a dense vector.
#[inline]
pub fn sparse_margin(indices: &[u32], values: &[f64], x: &[f64]) -> f64 {
    let mut m = 0.0;
    for (&v, &a) in indices.iter().zip(values) {
        m += a * x[v as usize];
    }
    m
}

impl<'a> Objective<'a> {
    pub fn new(
        data: &'a SparseDataset,
        profile: &'a SparsityProfile,
        lambda: f64,
    ) -> Result<Self, ObjectiveError> {
        if !(lambda > 0.0) {
            return Err(ObjectiveError::InvalidRegularization { lambda });
        }
        if profile.p.len() != data.dim() {
            return Err(ObjectiveError::ProfileMismatch);
        }
        Ok(Self { data, profile, lambda })
    }

    pub fn data(&self) -> &'a SparseDataset {
        self.data
    }

    pub fn profile(&self) -> &'a SparsityProfile {
        self.profile
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    /// `f(x) = (1/n) Σ_i log(1 + exp(−b_i·a_iᵀx)) + (λ/2)‖x‖²`, evaluated
    /// through the overflow-safe softplus form.
    pub fn loss(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let mut acc = 0.0f64;
        for i in 0..self.n() {
            let (idx, val) = self.data.row(i);
            let margin = sparse_margin(idx, val, x);
            acc += math::softplus(-self.data.label(i) * margin);
        }
        let sq: f64 = x.iter().map(|v| v * v).sum();
        acc / self.n() as f64 + 0.5 * self.lambda * sq
    }

    /// `σ_i` at a dense iterate.
    #[inline]
    pub fn sigma_at(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.data.row(i);
        sigma(self.data.label(i), sparse_margin(idx, val, x))
    }

    /// `σ_i` from the values of `x` restricted to `S_i` (given in support
    /// order). This is the form the lock-free workers use: they only ever
    /// read the support coordinates.
    #[inline]
    pub fn gradient_scalar(&self, i: usize, x_on_support: &[f64]) -> f64 {
        let (_, val) = self.data.row(i);
        debug_assert_eq!(val.len(), x_on_support.len());
        let mut margin = 0.0;
        for (&a, &xv) in val.iter().zip(x_on_support) {
            margin += a * xv;
        }
        sigma(self.data.label(i), margin)
    }

    /// `∇f(x) = (1/n) Σ_i σ_i(x)·a_i + λx`.
    pub fn full_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.dim()];
        self.accumulate_sigma_terms(x, 0..self.n(), |v, contrib| acc[v] += contrib);
        let inv_n = 1.0 / self.n() as f64;
        acc.iter()
            .zip(x)
            .map(|(&a_v, &x_v)| full_gradient_coord(a_v, inv_n, self.lambda, x_v))
            .collect()
    }

    /// Data part of the gradient, `(1/n) Σ_i σ_i(x)·a_i`, without the `λx`
    /// term. This is the batch term SVRG anchors to.
    pub fn data_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.dim()];
        self.accumulate_sigma_terms(x, 0..self.n(), |v, contrib| acc[v] += contrib);
        let inv_n = 1.0 / self.n() as f64;
        acc.iter().map(|&a_v| crate::updates::data_gradient_coord(a_v, inv_n)).collect()
    }

    /// Stream `σ_i(x)·a_iv` contributions for a sample range into a sink.
    /// Shared by [`Objective::full_gradient`] and the parallel sync phase so
    /// both accumulate in the same order.
    #[inline]
    pub fn accumulate_sigma_terms<F>(
        &self,
        x: &[f64],
        samples: core::ops::Range<usize>,
        mut sink: F,
    ) where
        F: FnMut(usize, f64),
    {
        for i in samples {
            let s = self.sigma_at(i, x);
            let (idx, val) = self.data.row(i);
            for (&v, &a) in idx.iter().zip(val) {
                sink(v as usize, s * a);
            }
        }
    }

    /// `‖∇f(x)‖∞`.
    pub fn gradient_inf_norm(&self, x: &[f64]) -> f64 {
        self.full_gradient(x)
            .iter()
            .map(|g| math::abs(*g))
            .fold(0.0, f64::max)
    }
}

/// Failure of the reference solve.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceError {
    InvalidTolerance { tol: f64 },
    /// The gradient norm did not reach `tol` within the epoch cap.
    NotConverged { epochs: u64, grad_inf_norm: f64, tol: f64 },
    Data(DataError),
}

impl fmt::Display for ReferenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceError::InvalidTolerance { tol } => {
                write!(f, "reference tolerance must be positive, got {tol}")
            }
            ReferenceError::NotConverged { epochs, grad_inf_norm, tol } => write!(
                f,
                "reference solve stopped at ‖∇f‖∞ = {grad_inf_norm:e} after {epochs} epochs \
                 (target {tol:e}); refusing to return a partial optimum"
            ),
            ReferenceError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ReferenceError {}

/// Default stopping tolerance on `‖∇f(x)‖∞` for [`reference_optimum`].
pub const REFERENCE_TOL: f64 = 1e-12;

/// Default epoch cap for [`reference_optimum`].
pub const REFERENCE_MAX_EPOCHS: u64 = 50_000;

/// Solve for the optimum with serial dense SAGA at `γ = 1/(5L)` until
/// `‖∇f(x)‖∞ ≤ tol`, erroring out — never returning a partial result — if
/// the epoch cap is hit first.
///
/// The sampler seed is a fixed constant, so the returned vector is a pure
/// function of `(dataset, λ, tol)` and can be cached by content hash.
pub fn reference_optimum(
    obj: &Objective<'_>,
    tol: f64,
    max_epochs: u64,
) -> Result<Vec<f64>, ReferenceError> {
    if !(tol > 0.0) {
        return Err(ReferenceError::InvalidTolerance { tol });
    }
    let constants = crate::data::problem_constants(obj.data(), obj.lambda())
        .map_err(ReferenceError::Data)?;
    let gamma = 1.0 / (5.0 * constants.l_smooth);
    let n = obj.n();

    let mut state = crate::serial::SerialState::zeros(n, obj.dim());
    // Fixed internal seed: the reference solve must be reproducible
    // independently of any experiment seed.
    let mut rng = crate::rng::SplitMix64::new(0x0A5A_6A00_5EED_0001);
    for _ in 0..max_epochs {
        for _ in 0..n {
            let i = rng.below(n);
            crate::serial::saga_dense_step(obj, &mut state, i, gamma);
        }
        if obj.gradient_inf_norm(&state.x) <= tol {
            return Ok(state.x);
        }
    }
    Err(ReferenceError::NotConverged {
        epochs: max_epochs,
        grad_inf_norm: obj.gradient_inf_norm(&state.x),
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sparsity_profile;
    use crate::data::SparseDataset;

    fn tiny() -> (SparseDataset, SparsityProfile) {
        let ds = SparseDataset::from_rows(
            1,
            &[(1.0, vec![(0, 1.0)]), (-1.0, vec![(0, 1.0)])],
        )
        .unwrap();
        let prof = sparsity_profile(&ds);
        (ds, prof)
    }

    #[test]
    fn loss_at_zero_is_log_two_plus_nothing() {
        let (ds, prof) = tiny();
        let obj = Objective::new(&ds, &prof, 1.0).unwrap();
        assert!((obj.loss(&[0.0]) - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn sigma_at_zero_margin_is_minus_half_label() {
        assert_eq!(sigma(1.0, 0.0), -0.5);
        assert_eq!(sigma(-1.0, 0.0), 0.5);
    }

    #[test]
    fn sigma_saturates_safely() {
        assert_eq!(sigma(1.0, 1e4), 0.0);
        assert!((sigma(1.0, -1e4) + 1.0).abs() < 1e-15);
        assert!(sigma(1.0, f64::MAX).is_finite());
    }

    #[test]
    fn sigma_sign_and_magnitude_bounds() {
        let mut rng = crate::rng::SplitMix64::new(9);
        for _ in 0..1000 {
            let b = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
            let m = (rng.next_f64() - 0.5) * 60.0;
            let s = sigma(b, m);
            assert!(s.abs() <= 1.0);
            assert!(s * b <= 0.0, "sign(σ) must oppose the label");
        }
    }

    #[test]
    fn gradient_scalar_matches_dense_path() {
        let ds = SparseDataset::from_rows(
            4,
            &[(1.0, vec![(1, 0.5), (3, -2.0)])],
        )
        .unwrap();
        let prof = sparsity_profile(&ds);
        let obj = Objective::new(&ds, &prof, 0.5).unwrap();
        let x = [9.0, 0.25, 7.0, -0.5];
        let on_support = [x[1], x[3]];
        assert_eq!(obj.gradient_scalar(0, &on_support), obj.sigma_at(0, &x));
    }

    #[test]
    fn balanced_labels_cancel_data_gradient_at_zero() {
        let (ds, prof) = tiny();
        let obj = Objective::new(&ds, &prof, 1.0).unwrap();
        let g = obj.full_gradient(&[0.0]);
        assert!(g[0].abs() < 1e-16);
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let (ds, prof) = tiny();
        assert!(Objective::new(&ds, &prof, 0.0).is_err());
    }

    #[test]
    fn reference_optimum_is_stationary_and_deterministic() {
        let ds = SparseDataset::from_rows(
            2,
            &[
                (1.0, vec![(0, 1.0), (1, 0.5)]),
                (-1.0, vec![(0, 0.5)]),
                (1.0, vec![(1, 1.0)]),
            ],
        )
        .unwrap();
        let prof = sparsity_profile(&ds);
        let obj = Objective::new(&ds, &prof, 0.1).unwrap();
        let x1 = reference_optimum(&obj, 1e-12, 10_000).unwrap();
        let x2 = reference_optimum(&obj, 1e-12, 10_000).unwrap();
        assert_eq!(x1, x2);
        assert!(obj.gradient_inf_norm(&x1) <= 1e-12);
    }

    #[test]
    fn reference_optimum_refuses_partial_results() {
        let (ds, prof) = tiny();
        let obj = Objective::new(&ds, &prof, 1e-3).unwrap();
        let err = reference_optimum(&obj, 1e-14, 1).unwrap_err();
        assert!(matches!(err, ReferenceError::NotConverged { .. }));
    }
}
