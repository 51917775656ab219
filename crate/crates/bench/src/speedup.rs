//! Speedup measurement: time-to-target over repeated runs.
//!
//! Wall-clock speedup is `median time-to-target with 1 worker / median with
//! p workers`; the "theoretical" speedup is the same ratio in iterations,
//! which isolates the algorithmic effect from hardware overhead. Rows whose
//! target was never reached stay empty — nothing is fabricated. Medians are
//! the default (robust to scheduler noise); means are available via flag.

use std::io::{self, Write};

use asaga_core::Method;

use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Median,
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupRow {
    pub workers: usize,
    pub median_seconds: Option<f64>,
    pub speedup: Option<f64>,
    pub median_iterations: Option<f64>,
    pub theoretical_speedup: Option<f64>,
    /// How many of the repeats reached the target.
    pub reached: usize,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupReport {
    pub method: Method,
    pub target_subopt: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub seed: u64,
    pub aggregate: Aggregate,
    pub rows: Vec<SpeedupRow>,
}

fn aggregate(values: &mut Vec<f64>, how: Aggregate) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    match how {
        Aggregate::Mean => Some(values.iter().sum::<f64>() / values.len() as f64),
        Aggregate::Median => {
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let k = values.len();
            Some(if k % 2 == 1 {
                values[k / 2]
            } else {
                0.5 * (values[k / 2 - 1] + values[k / 2])
            })
        }
    }
}

/// Build the report from persisted traces: a pure function, so recomputing
/// from re-read CSVs gives the identical result.
///
/// `runs` holds `(workers, trace)` pairs, repeats included; the baseline is
/// the `workers == 1` row (speedup columns stay empty without it).
pub fn build_report(
    method: Method,
    target_subopt: f64,
    gamma: f64,
    lambda: f64,
    seed: u64,
    how: Aggregate,
    runs: &[(usize, Trace)],
) -> SpeedupReport {
    let mut worker_counts: Vec<usize> = runs.iter().map(|(w, _)| *w).collect();
    worker_counts.sort_unstable();
    worker_counts.dedup();

    let mut rows = Vec::new();
    for &workers in &worker_counts {
        let mut seconds = Vec::new();
        let mut iterations = Vec::new();
        let mut repeats = 0usize;
        for (_, trace) in runs.iter().filter(|(w, _)| *w == workers) {
            repeats += 1;
            if let Some((secs, iters)) = trace.time_to_target(target_subopt) {
                seconds.push(secs);
                iterations.push(iters);
            }
        }
        let reached = seconds.len();
        rows.push(SpeedupRow {
            workers,
            median_seconds: aggregate(&mut seconds, how),
            speedup: None,
            median_iterations: aggregate(&mut iterations, how),
            theoretical_speedup: None,
            reached,
            repeats,
        });
    }

    let base_secs = rows.iter().find(|r| r.workers == 1).and_then(|r| r.median_seconds);
    let base_iters = rows.iter().find(|r| r.workers == 1).and_then(|r| r.median_iterations);
    for row in &mut rows {
        row.speedup = match (base_secs, row.median_seconds) {
            (Some(b), Some(s)) if s > 0.0 => Some(b / s),
            _ => None,
        };
        row.theoretical_speedup = match (base_iters, row.median_iterations) {
            (Some(b), Some(s)) if s > 0.0 => Some(b / s),
            _ => None,
        };
    }
    SpeedupReport { method, target_subopt, gamma, lambda, seed, aggregate: how, rows }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

impl SpeedupReport {
    /// CSV with the measurement columns first, then the full provenance of
    /// the configuration that produced each row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(
            b"workers,median_seconds,speedup,median_iterations,theoretical_speedup,\
              reached,repeats,method,gamma,lambda,seed,target_subopt\n",
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{:.16e},{:.16e},{},{:.16e}",
                r.workers,
                opt(r.median_seconds),
                opt(r.speedup),
                opt(r.median_iterations),
                opt(r.theoretical_speedup),
                r.reached,
                r.repeats,
                self.method,
                self.gamma,
                self.lambda,
                self.seed,
                self.target_subopt,
            )?;
        }
        Ok(())
    }

    pub fn print_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "speedup report: method={} target={:.3e} gamma={:.6e} lambda={:.6e} seed={}",
            self.method, self.target_subopt, self.gamma, self.lambda, self.seed
        )?;
        writeln!(out, "{:>8} {:>14} {:>9} {:>16} {:>12} {:>8}",
            "workers", "seconds", "speedup", "iterations", "theoretical", "reached")?;
        for r in &self.rows {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "unreached".into());
            writeln!(
                out,
                "{:>8} {:>14} {:>9} {:>16} {:>12} {:>5}/{}",
                r.workers,
                r.median_seconds.map(|s| format!("{s:.6}")).unwrap_or_else(|| "unreached".into()),
                fmt(r.speedup),
                r.median_iterations.map(|s| format!("{s:.0}")).unwrap_or_else(|| "unreached".into()),
                fmt(r.theoretical_speedup),
                r.reached,
                r.repeats,
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceRecord;

    fn trace_reaching(workers: usize, secs: f64, iters: u64) -> (usize, Trace) {
        (
            workers,
            Trace {
                method: Method::Asaga,
                workers,
                gamma: 0.1,
                lambda: 0.01,
                seed: 0,
                records: vec![
                    TraceRecord { iteration: 0, wall_seconds: 0.0, suboptimality: 1.0 },
                    TraceRecord { iteration: iters, wall_seconds: secs, suboptimality: 1e-5 },
                ],
                tau_hat: None,
                clamped: 0,
            },
        )
    }

    #[test]
    fn single_worker_speedup_is_exactly_one() {
        let runs = vec![trace_reaching(1, 2.0, 100)];
        let report =
            build_report(Method::Asaga, 1e-5, 0.1, 0.01, 0, Aggregate::Median, &runs);
        assert_eq!(report.rows[0].speedup, Some(1.0));
        assert_eq!(report.rows[0].theoretical_speedup, Some(1.0));
    }

    #[test]
    fn medians_and_ratios() {
        let runs = vec![
            trace_reaching(1, 4.0, 1000),
            trace_reaching(1, 2.0, 1000),
            trace_reaching(1, 3.0, 1000),
            trace_reaching(2, 1.5, 1100),
            trace_reaching(2, 1.5, 900),
            trace_reaching(2, 9.0, 1000),
        ];
        let report =
            build_report(Method::Asaga, 1e-5, 0.1, 0.01, 0, Aggregate::Median, &runs);
        let w2 = report.rows.iter().find(|r| r.workers == 2).unwrap();
        assert_eq!(w2.median_seconds, Some(1.5));
        assert_eq!(w2.speedup, Some(2.0));
        assert_eq!(w2.theoretical_speedup, Some(1.0));
    }

    #[test]
    fn unreached_rows_stay_empty() {
        let mut runs = vec![trace_reaching(1, 1.0, 100)];
        let (w, mut t) = trace_reaching(4, 1.0, 100);
        t.records[1].suboptimality = 1e-2; // never reaches 1e-5
        runs.push((w, t));
        let report =
            build_report(Method::Asaga, 1e-5, 0.1, 0.01, 0, Aggregate::Median, &runs);
        let w4 = report.rows.iter().find(|r| r.workers == 4).unwrap();
        assert_eq!(w4.reached, 0);
        assert_eq!(w4.median_seconds, None);
        assert_eq!(w4.speedup, None);
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.lines().nth(2).unwrap().starts_with("4,,,,,0,1,"), "{text}");
    }
}
