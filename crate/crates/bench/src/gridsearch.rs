//! Step-size grid search: equally spaced candidates, fixed budget, pick the
//! γ with lowest final suboptimality and warn when the winner sits on a
//! grid boundary (the grid should then be widened).

use asaga_core::serial::{Method, SolverConfig};
use asaga_core::Objective;
use thiserror::Error;

use crate::run::{run_experiment, RunError, RunOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub gamma: f64,
    pub final_suboptimality: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub candidates: Vec<Candidate>,
    pub best_gamma: f64,
    pub best_suboptimality: f64,
    /// The winner is the smallest or largest grid value.
    pub boundary_winner: bool,
}

#[derive(Debug, Error)]
pub enum GridSearchError {
    #[error("grid needs at least one point with 0 < min ≤ max")]
    BadGrid,
    #[error("every step size in the grid diverged")]
    AllDiverged,
}

/// Equally spaced grid of `points` values over `[lo, hi]`, inclusive.
pub fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, GridSearchError> {
    if points == 0 || !(lo > 0.0) || !(hi >= lo) {
        return Err(GridSearchError::BadGrid);
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|k| lo + step * k as f64).collect())
}

/// Run every candidate to the configured budget and pick the best final
/// suboptimality. Divergence disqualifies a candidate; if everything
/// diverges that is an explicit error, not a winner.
pub fn search(
    method: Method,
    obj: &Objective<'_>,
    base: &SolverConfig,
    f_star: f64,
    opts: &RunOptions,
    gammas: &[f64],
) -> Result<GridSearchResult, GridSearchError> {
    if gammas.is_empty() {
        return Err(GridSearchError::BadGrid);
    }
    let mut candidates = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let config = SolverConfig { gamma, ..*base };
        let outcome = run_experiment(method, obj, &config, f_star, opts);
        let candidate = match outcome {
            Ok(out) => Candidate {
                gamma,
                final_suboptimality: out.trace.final_suboptimality(),
                diverged: false,
            },
            Err(RunError::Solver(asaga_core::serial::SolverError::Diverged { .. }))
            | Err(RunError::Diverged { .. }) => {
                Candidate { gamma, final_suboptimality: None, diverged: true }
            }
            Err(RunError::Solver(e)) => panic!("grid search misconfigured: {e}"),
            Err(RunError::WorkerCount { method, workers }) => {
                panic!("grid search misconfigured: {method} with {workers} workers")
            }
        };
        candidates.push(candidate);
    }

    let best = candidates
        .iter()
        .enumerate()
        .filter_map(|(k, c)| c.final_suboptimality.map(|s| (k, s)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let Some((best_idx, best_subopt)) = best else {
        return Err(GridSearchError::AllDiverged);
    };
    Ok(GridSearchResult {
        best_gamma: candidates[best_idx].gamma,
        best_suboptimality: best_subopt,
        boundary_winner: best_idx == 0 || best_idx == candidates.len() - 1,
        candidates,
    })
}
