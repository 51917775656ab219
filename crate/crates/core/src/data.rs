//! Sparse datasets in CSR form with the sparsity statistics the solvers
//! and the step-size theory need.
//!
//! A dataset is `n` samples `(a_i, b_i)` with `a_i ∈ R^d` sparse and
//! `b_i ∈ {−1, +1}`. The support `S_i` of sample `i` is the set of features
//! with an explicit entry; every row must have a non-empty support.
//!
//! [`SparsityProfile`] carries, per feature `v`:
//! * `p_v` — the probability that `v ∈ S_i` for `i` uniform in `{0..n}`,
//! * `d_diag[v] = 1 / p_v` — the diagonal reweighting that makes the
//!   projected average-gradient term unbiased (`E_i[D_i ᾱ] = ᾱ`),
//!
//! together with `Δ_r = max_v |{i : v ∈ S_i}|` and `Δ = Δ_r / n`, the
//! normalized maximum feature frequency that controls how much asynchrony
//! the step size can tolerate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// CSR feature matrix with ±1 labels.
///
/// Indices are 0-based and strictly increasing within each row. Immutable
/// after construction and therefore freely shareable across worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    d: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    labels: Vec<f64>,
}

/// Per-feature usage statistics and the `D` reweighting diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityProfile {
    /// `p_v = |{i : v ∈ S_i}| / n`.
    pub p: Vec<f64>,
    /// `Δ_r = max_v |{i : v ∈ S_i}|` (a count).
    pub delta_r: usize,
    /// `Δ = Δ_r / n`.
    pub delta: f64,
    /// `1 / p_v` for used features, `0` for features in no support.
    pub d_diag: Vec<f64>,
}

/// Smoothness and strong-convexity constants of the regularized objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// `L = max_i ‖a_i‖² / 4 + λ` for the logistic loss.
    pub l_smooth: f64,
    /// `μ = λ`.
    pub mu: f64,
    /// `κ = L / μ`.
    pub kappa: f64,
}

/// Errors from dataset construction and statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum DataError {
    /// A row has no explicit entries.
    EmptySupport { sample: usize },
    /// A feature index is `>= d`.
    IndexOutOfRange { sample: usize, index: u32, dim: usize },
    /// Row indices are not strictly increasing.
    NonIncreasingIndices { sample: usize },
    /// A label is not ±1.
    BadLabel { sample: usize, label: f64 },
    /// CSR arrays have inconsistent lengths.
    ShapeMismatch,
    /// Regularization weight must be positive.
    InvalidRegularization { lambda: f64 },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::EmptySupport { sample } => {
                write!(f, "sample {sample} has an empty support")
            }
            DataError::IndexOutOfRange { sample, index, dim } => {
                write!(f, "sample {sample}: feature index {index} out of range for d={dim}")
            }
            DataError::NonIncreasingIndices { sample } => {
                write!(f, "sample {sample}: feature indices are not strictly increasing")
            }
            DataError::BadLabel { sample, label } => {
                write!(f, "sample {sample}: label {label} is not -1 or +1")
            }
            DataError::ShapeMismatch => write!(f, "CSR arrays have inconsistent lengths"),
            DataError::InvalidRegularization { lambda } => {
                write!(f, "regularization weight must be positive, got {lambda}")
            }
        }
    }
}

impl core::error::Error for DataError {}

/// Parse error for libsvm-format text, with the 1-based offending line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    MissingLabel,
    BadLabel(String),
    BadFeature(String),
    /// Indices must be 1-based and strictly increasing.
    NonIncreasingIndex(u32),
    ZeroIndex,
    EmptySupport,
    /// Explicit dimension override smaller than an index seen in the data.
    DimensionTooSmall { seen: u32, dim: usize },
    NoSamples,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            ParseErrorKind::MissingLabel => write!(f, "missing label"),
            ParseErrorKind::BadLabel(t) => write!(f, "cannot parse label `{t}`"),
            ParseErrorKind::BadFeature(t) => write!(f, "cannot parse feature `{t}` (want idx:val)"),
            ParseErrorKind::NonIncreasingIndex(i) => {
                write!(f, "feature index {i} is not strictly increasing")
            }
            ParseErrorKind::ZeroIndex => write!(f, "feature indices are 1-based; got 0"),
            ParseErrorKind::EmptySupport => write!(f, "sample has no features"),
            ParseErrorKind::DimensionTooSmall { seen, dim } => {
                write!(f, "feature index {seen} exceeds explicit dimension {dim}")
            }
            ParseErrorKind::NoSamples => write!(f, "no samples in input"),
        }
    }
}

impl core::error::Error for ParseError {}

impl SparseDataset {
    /// Build from raw CSR arrays, validating every invariant.
    ///
    /// `labels` must hold exactly ±1; use [`parse_libsvm`] for the permissive
    /// label mapping applied at the file boundary.
    pub fn from_csr(
        d: usize,
        indptr: Vec<usize>,
        indices: Vec<u32>,
        values: Vec<f64>,
        labels: Vec<f64>,
    ) -> Result<Self, DataError> {
        if indptr.is_empty()
            || indptr.len() != labels.len() + 1
            || indices.len() != values.len()
            || *indptr.last().unwrap() != indices.len()
            || indptr[0] != 0
        {
            return Err(DataError::ShapeMismatch);
        }
        let n = labels.len();
        for i in 0..n {
            let (lo, hi) = (indptr[i], indptr[i + 1]);
            if hi < lo || hi > indices.len() {
                return Err(DataError::ShapeMismatch);
            }
            if lo == hi {
                return Err(DataError::EmptySupport { sample: i });
            }
            let row = &indices[lo..hi];
            for w in row.windows(2) {
                if w[1] <= w[0] {
                    return Err(DataError::NonIncreasingIndices { sample: i });
                }
            }
            let last = row[row.len() - 1];
            if last as usize >= d {
                return Err(DataError::IndexOutOfRange { sample: i, index: last, dim: d });
            }
            if labels[i] != 1.0 && labels[i] != -1.0 {
                return Err(DataError::BadLabel { sample: i, label: labels[i] });
            }
        }
        Ok(Self { d, indptr, indices, values, labels })
    }

    /// Build from per-sample `(label, [(index, value)])` rows.
    pub fn from_rows(d: usize, rows: &[(f64, Vec<(u32, f64)>)]) -> Result<Self, DataError> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut labels = Vec::with_capacity(rows.len());
        indptr.push(0);
        for (label, row) in rows {
            for &(idx, val) in row {
                indices.push(idx);
                values.push(val);
            }
            indptr.push(indices.len());
            labels.push(*label);
        }
        Self::from_csr(d, indptr, indices, values, labels)
    }

    /// Sample count.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Total number of stored entries.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Support indices and values of sample `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    /// Label of sample `i` (±1).
    #[inline]
    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// Raw CSR views, in `(d, indptr, indices, values, labels)` order.
    /// Intended for serialization; the arrays satisfy the type invariants.
    pub fn csr_parts(&self) -> (usize, &[usize], &[u32], &[f64], &[f64]) {
        (self.d, &self.indptr, &self.indices, &self.values, &self.labels)
    }

    /// True when every row stores every feature.
    pub fn is_fully_dense(&self) -> bool {
        self.nnz() == self.n() * self.d
    }
}

/// Parse libsvm-format text: one sample per line, `<label> <idx>:<val> ...`
/// with 1-based strictly increasing indices.
///
/// Any strictly positive label maps to `+1`, everything else to `−1` (the
/// source datasets variously use `{0,1}`, `{1,2}` and `{−1,+1}`). Blank
/// lines are skipped. The dimension is the maximum index seen unless
/// `d_override` pins it (it must then cover every index).
pub fn parse_libsvm(text: &str, d_override: Option<usize>) -> Result<SparseDataset, ParseError> {
    let mut indptr = vec![0usize];
    let mut indices: Vec<u32> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut max_index = 0u32;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let mut tokens = raw.split_whitespace();
        let Some(label_tok) = tokens.next() else { continue };
        let label: f64 = label_tok
            .parse()
            .map_err(|_| ParseError { line, kind: ParseErrorKind::BadLabel(label_tok.into()) })?;
        let mut prev: Option<u32> = None;
        let mut count = 0usize;
        for tok in tokens {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| ParseError { line, kind: ParseErrorKind::BadFeature(tok.into()) })?;
            let idx: u32 = idx_s
                .parse()
                .map_err(|_| ParseError { line, kind: ParseErrorKind::BadFeature(tok.into()) })?;
            let val: f64 = val_s
                .parse()
                .map_err(|_| ParseError { line, kind: ParseErrorKind::BadFeature(tok.into()) })?;
            if idx == 0 {
                return Err(ParseError { line, kind: ParseErrorKind::ZeroIndex });
            }
            if let Some(p) = prev {
                if idx <= p {
                    return Err(ParseError { line, kind: ParseErrorKind::NonIncreasingIndex(idx) });
                }
            }
            prev = Some(idx);
            max_index = max_index.max(idx);
            indices.push(idx - 1);
            values.push(val);
            count += 1;
        }
        if count == 0 {
            return Err(ParseError { line, kind: ParseErrorKind::EmptySupport });
        }
        labels.push(if label > 0.0 { 1.0 } else { -1.0 });
        indptr.push(indices.len());
    }

    if labels.is_empty() {
        return Err(ParseError { line: 0, kind: ParseErrorKind::NoSamples });
    }
    let d = match d_override {
        Some(d) if d < max_index as usize => {
            return Err(ParseError {
                line: 0,
                kind: ParseErrorKind::DimensionTooSmall { seen: max_index, dim: d },
            })
        }
        Some(d) => d,
        None => max_index as usize,
    };
    Ok(SparseDataset::from_csr(d, indptr, indices, values, labels)
        .expect("parser output satisfies CSR invariants"))
}

/// Z-score every feature column to mean 0 and variance 1, dropping constant
/// columns. The result is stored densely: every retained feature has an
/// explicit entry in every row, so the output is 100% dense (`Δ = 1`).
pub fn standardize(data: &SparseDataset) -> SparseDataset {
    let n = data.n();
    let d = data.dim();
    let nf = n as f64;

    let mut sums = vec![0.0f64; d];
    for i in 0..n {
        let (idx, val) = data.row(i);
        for (&v, &a) in idx.iter().zip(val) {
            sums[v as usize] += a;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / nf).collect();

    // Second pass: population variance about the mean; absent entries
    // contribute (0 - mean)^2.
    let mut sq = vec![0.0f64; d];
    let mut counts = vec![0usize; d];
    for i in 0..n {
        let (idx, val) = data.row(i);
        for (&v, &a) in idx.iter().zip(val) {
            let dvi = a - means[v as usize];
            sq[v as usize] += dvi * dvi;
            counts[v as usize] += 1;
        }
    }
    let mut vars = vec![0.0f64; d];
    for v in 0..d {
        let zeros = (n - counts[v]) as f64;
        vars[v] = (sq[v] + zeros * means[v] * means[v]) / nf;
    }

    // A column is constant when its deviation is at noise level relative to
    // its mean magnitude.
    let keep: Vec<usize> = (0..d)
        .filter(|&v| vars[v] > (1e-12 * (1.0 + math::abs(means[v]))) * (1e-12 * (1.0 + math::abs(means[v]))))
        .collect();
    let inv_std: Vec<f64> = keep.iter().map(|&v| 1.0 / math::sqrt(vars[v])).collect();

    let d_new = keep.len();
    let mut dense_row = vec![0.0f64; d];
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(n * d_new);
    let mut values = Vec::with_capacity(n * d_new);
    indptr.push(0);
    for i in 0..n {
        let (idx, val) = data.row(i);
        for (&v, &a) in idx.iter().zip(val) {
            dense_row[v as usize] = a;
        }
        for (new_v, (&v, &s)) in keep.iter().zip(&inv_std).enumerate() {
            indices.push(new_v as u32);
            values.push((dense_row[v] - means[v]) * s);
        }
        indptr.push(indices.len());
        for &v in idx {
            dense_row[v as usize] = 0.0;
        }
    }

    SparseDataset::from_csr(d_new, indptr, indices, values, data.labels.clone())
        .expect("standardized output satisfies CSR invariants")
}

use crate::math;

/// Compute per-feature probabilities, `Δ_r`, `Δ` and the `D` diagonal.
///
/// Features appearing in no support get `p_v = 0` and `d_diag[v] = 0`: the
/// reweighting `1/p_v` is undefined there and the coordinate can never be
/// touched by a sparse update, which is consistent because the regularized
/// optimum is 0 on such coordinates.
pub fn sparsity_profile(data: &SparseDataset) -> SparsityProfile {
    let n = data.n();
    let d = data.dim();
    let mut counts = vec![0usize; d];
    for i in 0..n {
        let (idx, _) = data.row(i);
        for &v in idx {
            counts[v as usize] += 1;
        }
    }
    let delta_r = counts.iter().copied().max().unwrap_or(0);
    let nf = n as f64;
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    let d_diag: Vec<f64> = counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { nf / c as f64 })
        .collect();
    SparsityProfile { p, delta_r, delta: delta_r as f64 / nf, d_diag }
}

/// `L`, `μ` and `κ` for the L2-regularized logistic objective.
pub fn problem_constants(data: &SparseDataset, lambda: f64) -> Result<ProblemConstants, DataError> {
    if !(lambda > 0.0) {
        return Err(DataError::InvalidRegularization { lambda });
    }
    let mut max_sq = 0.0f64;
    for i in 0..data.n() {
        let (_, val) = data.row(i);
        let sq: f64 = val.iter().map(|a| a * a).sum();
        max_sq = max_sq.max(sq);
    }
    let l_smooth = max_sq / 4.0 + lambda;
    Ok(ProblemConstants { l_smooth, mu: lambda, kappa: l_smooth / lambda })
}
