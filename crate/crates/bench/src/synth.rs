//! Built-in synthetic dataset generator.
//!
//! Generates sparse logistic-regression problems with a planted weight
//! vector, so the sparsity `Δ` and the conditioning can be dialed without
//! shipping the large public datasets. Labels are `sign(a_i·w* + noise·g_i)`
//! with standard-normal `g_i`: a positive `noise` makes the problem
//! non-separable, which gives constant-step SGD a genuine variance floor.
//!
//! Specs can be written inline on the CLI as
//! `synth:n=200,d=50,k=5,seed=1,noise=0.05` (or `kmin=…,kmax=…` for mixed
//! support sizes, and `cover=1` to force every feature into some support).

use asaga_core::data::SparseDataset;
use asaga_core::rng::SplitMix64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub support_min: usize,
    pub support_max: usize,
    /// Standard deviation of the label noise relative to the margin.
    pub label_noise: f64,
    pub seed: u64,
    /// Force every feature to appear in at least one support.
    pub cover_all: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 200,
            d: 50,
            support_min: 5,
            support_max: 5,
            label_noise: 0.05,
            seed: 1,
            cover_all: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthParseError {
    #[error("bad synthetic spec entry `{0}` (want key=value)")]
    BadEntry(String),
    #[error("unknown synthetic spec key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: `{value}`")]
    BadValue { key: String, value: String },
    #[error("synthetic spec needs 1 ≤ kmin ≤ kmax ≤ d and n ≥ 1")]
    Inconsistent,
}

impl SyntheticSpec {
    /// Parse the comma-separated `key=value` body (without the `synth:`
    /// scheme prefix).
    pub fn parse(body: &str) -> Result<Self, SynthParseError> {
        let mut spec = SyntheticSpec::default();
        for entry in body.split(',').filter(|e| !e.trim().is_empty()) {
            let (key, value) = entry
                .split_once('=')
                .ok_or_else(|| SynthParseError::BadEntry(entry.into()))?;
            let bad = || SynthParseError::BadValue { key: key.into(), value: value.into() };
            match key.trim() {
                "n" => spec.n = value.parse().map_err(|_| bad())?,
                "d" => spec.d = value.parse().map_err(|_| bad())?,
                "k" => {
                    let k = value.parse().map_err(|_| bad())?;
                    spec.support_min = k;
                    spec.support_max = k;
                }
                "kmin" => spec.support_min = value.parse().map_err(|_| bad())?,
                "kmax" => spec.support_max = value.parse().map_err(|_| bad())?,
                "noise" => spec.label_noise = value.parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.parse().map_err(|_| bad())?,
                "cover" => spec.cover_all = value.trim() == "1" || value.trim() == "true",
                other => return Err(SynthParseError::UnknownKey(other.into())),
            }
        }
        if spec.n == 0
            || spec.support_min == 0
            || spec.support_min > spec.support_max
            || spec.support_max > spec.d
        {
            return Err(SynthParseError::Inconsistent);
        }
        Ok(spec)
    }
}

fn normal(rng: &mut SplitMix64) -> f64 {
    // Box-Muller; u is kept away from 0.
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) + f64::MIN_POSITIVE;
    let v = rng.next_f64();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Generate the dataset for a spec. Deterministic in the spec.
pub fn generate(spec: &SyntheticSpec) -> SparseDataset {
    let mut rng = SplitMix64::new(spec.seed ^ 0x5EED_DA7A_0001);
    let w_star: Vec<f64> = (0..spec.d).map(|_| normal(&mut rng)).collect();

    let mut rows: Vec<(f64, Vec<(u32, f64)>)> = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let k = spec.support_min + rng.below(spec.support_max - spec.support_min + 1);
        let mut support: Vec<u32> = Vec::with_capacity(k + 2);
        if spec.cover_all {
            for v in (i..spec.d).step_by(spec.n.max(1)) {
                support.push(v as u32);
            }
        }
        while support.len() < k {
            let v = rng.below(spec.d) as u32;
            if !support.contains(&v) {
                support.push(v);
            }
        }
        support.sort_unstable();
        support.dedup();

        let scale = 1.0 / (support.len() as f64).sqrt();
        let row: Vec<(u32, f64)> =
            support.into_iter().map(|v| (v, scale * normal(&mut rng))).collect();
        let margin: f64 = row.iter().map(|&(v, a)| a * w_star[v as usize]).sum();
        let label = if margin + spec.label_noise * normal(&mut rng) >= 0.0 { 1.0 } else { -1.0 };
        rows.push((label, row));
    }
    SparseDataset::from_rows(spec.d, &rows).expect("generator emits valid rows")
}
