//! Shared helpers for the integration tests: small random instances with
//! controllable sparsity.
#![allow(dead_code)] // each test binary uses a different subset

use asaga_core::data::{sparsity_profile, SparseDataset, SparsityProfile};
use asaga_core::rng::SplitMix64;

/// Random instance with supports of size in `[smin, smax]` and values in
/// `[-1, 1]`. With `cover_all`, feature `v` is forced into row `v % n` so
/// every column is used (several invariants only hold on the used columns).
pub fn random_instance(
    rng: &mut SplitMix64,
    n: usize,
    d: usize,
    smin: usize,
    smax: usize,
    cover_all: bool,
) -> SparseDataset {
    assert!(smin >= 1 && smax <= d && smin <= smax);
    let mut rows: Vec<(f64, Vec<(u32, f64)>)> = Vec::with_capacity(n);
    for i in 0..n {
        let k = smin + rng.below(smax - smin + 1);
        let mut support: Vec<u32> = Vec::with_capacity(k + 2);
        if cover_all {
            for v in 0..d {
                if v % n == i {
                    support.push(v as u32);
                }
            }
        }
        while support.len() < k {
            let v = rng.below(d) as u32;
            if !support.contains(&v) {
                support.push(v);
            }
        }
        support.sort_unstable();
        support.dedup();
        let row: Vec<(u32, f64)> = support
            .into_iter()
            .map(|v| (v, 2.0 * rng.next_f64() - 1.0))
            .collect();
        let label = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        rows.push((label, row));
    }
    SparseDataset::from_rows(d, &rows).expect("generated rows are valid")
}

/// Fully dense random instance.
pub fn dense_instance(rng: &mut SplitMix64, n: usize, d: usize) -> SparseDataset {
    random_instance(rng, n, d, d, d, false)
}

pub fn random_x(rng: &mut SplitMix64, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * (2.0 * rng.next_f64() - 1.0)).collect()
}

/// Owning bundle so tests can borrow an `Objective` easily.
pub struct Instance {
    pub data: SparseDataset,
    pub profile: SparsityProfile,
    pub lambda: f64,
}

impl Instance {
    pub fn new(data: SparseDataset, lambda: f64) -> Self {
        let profile = sparsity_profile(&data);
        Self { data, profile, lambda }
    }

    pub fn objective(&self) -> asaga_core::Objective<'_> {
        asaga_core::Objective::new(&self.data, &self.profile, self.lambda).unwrap()
    }
}
