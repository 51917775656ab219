//! Time-stamped suboptimality traces and their CSV form.
//!
//! The CSV contract: header `iteration,wall_seconds,suboptimality`, one
//! record per line, LF endings, floats with 17 significant digits. For a
//! fixed seed the iteration and suboptimality columns of a serial run are
//! bit-reproducible; `wall_seconds` is real measured time and is not.

use std::io::{self, BufRead, Write};

use asaga_core::Method;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: u64,
    pub wall_seconds: f64,
    pub suboptimality: f64,
}

/// A run's records plus the exact configuration that produced them.
#[derive(Debug, Clone)]
pub struct Trace {
    pub method: Method,
    pub workers: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    /// Overlap estimate, when the run collected samples.
    pub tau_hat: Option<f64>,
    /// Number of records whose tiny negative suboptimality (an artifact of
    /// inconsistent snapshots near the optimum) was clamped to zero.
    pub clamped: usize,
}

impl Trace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(b"iteration,wall_seconds,suboptimality\n")?;
        for r in &self.records {
            writeln!(out, "{},{:.16e},{:.16e}", r.iteration, r.wall_seconds, r.suboptimality)?;
        }
        Ok(())
    }

    pub fn final_suboptimality(&self) -> Option<f64> {
        self.records.last().map(|r| r.suboptimality)
    }

    /// Where the trace first crosses `target`, as `(wall_seconds,
    /// iterations)`.
    ///
    /// The crossing is read off the curve by log-linear interpolation
    /// between the bracketing records: suboptimality decays exponentially
    /// for these solvers, so interpolating in log space recovers the
    /// crossing far inside the snapshot stride. Records at exactly zero are
    /// floored to keep the logs finite.
    pub fn time_to_target(&self, target: f64) -> Option<(f64, f64)> {
        if !(target > 0.0) {
            return None;
        }
        let hit = self.records.iter().position(|r| r.suboptimality <= target)?;
        let after = &self.records[hit];
        if hit == 0 {
            return Some((after.wall_seconds, after.iteration as f64));
        }
        let before = &self.records[hit - 1];
        let s0 = before.suboptimality.max(1e-300);
        let s1 = after.suboptimality.max(1e-300);
        if s0 <= s1 || s0 <= target {
            return Some((after.wall_seconds, after.iteration as f64));
        }
        let frac = ((s0.ln() - target.ln()) / (s0.ln() - s1.ln())).clamp(0.0, 1.0);
        let iters =
            before.iteration as f64 + frac * (after.iteration - before.iteration) as f64;
        let secs = before.wall_seconds + frac * (after.wall_seconds - before.wall_seconds);
        Some((secs, iters))
    }

    /// Invariants every well-formed trace satisfies.
    pub fn check_invariants(&self) -> Result<(), String> {
        for pair in self.records.windows(2) {
            if pair[1].iteration <= pair[0].iteration {
                return Err(format!(
                    "iterations not strictly increasing: {} then {}",
                    pair[0].iteration, pair[1].iteration
                ));
            }
            if pair[1].wall_seconds < pair[0].wall_seconds {
                return Err("wall clock went backwards".into());
            }
        }
        if let Some(r) = self.records.iter().find(|r| r.suboptimality < -1e-12) {
            return Err(format!("negative suboptimality {:e} survived clamping", r.suboptimality));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TraceParseError {
    #[error("trace line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Read back the records of a persisted trace CSV.
pub fn read_csv<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>, TraceParseError> {
    let mut records = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if k == 0 {
            if line.trim() != "iteration,wall_seconds,suboptimality" {
                return Err(TraceParseError::Malformed {
                    line: 1,
                    message: format!("unexpected header `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields.next().ok_or(TraceParseError::Malformed {
                line: k + 1,
                message: format!("missing {name}"),
            })
        };
        let iteration = next("iteration")?.trim().parse().map_err(|e| {
            TraceParseError::Malformed { line: k + 1, message: format!("iteration: {e}") }
        })?;
        let wall_seconds = next("wall_seconds")?.trim().parse().map_err(|e| {
            TraceParseError::Malformed { line: k + 1, message: format!("wall_seconds: {e}") }
        })?;
        let suboptimality = next("suboptimality")?.trim().parse().map_err(|e| {
            TraceParseError::Malformed { line: k + 1, message: format!("suboptimality: {e}") }
        })?;
        records.push(TraceRecord { iteration, wall_seconds, suboptimality });
    }
    Ok(records)
}
