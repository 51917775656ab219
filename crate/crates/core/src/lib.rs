//! Variance-reduced incremental gradient solvers for L2-regularized logistic
//! regression on sparse data, together with their lock-free asynchronous
//! parallel counterparts.
//!
//! The crate provides four layers:
//!
//! * [`data`] — CSR datasets with ±1 labels, sparsity statistics (`p_v`,
//!   `Δ_r`, `Δ`, the `D` reweighting diagonal) and smoothness constants.
//! * [`objective`] — the logistic loss, its scalar-compressed per-sample
//!   gradients, full gradients and a high-precision reference optimum.
//! * [`serial`] — single-threaded SGD, dense SAGA, Sparse SAGA, lagged-update
//!   SAGA and epoch-based sparse SVRG, all driven by a seeded sampler.
//! * [`parallel`] — the shared-memory engine: per-coordinate atomic `f64`
//!   vectors, ASAGA / Hogwild / Kromagnon-style worker loops and overlap
//!   (τ) instrumentation.
//!
//! [`theory`] evaluates the closed-form step-size and rate expressions used
//! for defaults and reporting.
//!
//! The crate is `no_std`-compatible (`alloc` required): disable the default
//! `std` feature and enable `libm` for the float transcendentals. Thread
//! spawning, timing and file formats live in the companion `asaga-bench`
//! crate; everything here is pure computation over caller-provided memory.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("asaga-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod data;
pub(crate) mod math;
pub mod objective;
pub mod parallel;
pub mod rng;
pub mod serial;
pub mod theory;

mod updates;

pub use data::{problem_constants, sparsity_profile, standardize, SparseDataset, SparsityProfile};
pub use objective::Objective;
pub use serial::Method;
