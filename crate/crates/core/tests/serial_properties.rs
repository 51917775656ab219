//! Brute-force enumeration oracles and trajectory equivalences for the
//! serial solvers.

mod common;

use asaga_core::objective::reference_optimum;
use asaga_core::rng::SplitMix64;
use asaga_core::serial::{
    flush_lag, run_serial, saga_dense_step, saga_lagged_step, saga_sparse_step, sgd_step,
    svrg_step, LagTracker, Method, RecordPoint, SerialState, SolverConfig, SolverError,
    SvrgReference,
};
use common::{dense_instance, random_instance, random_x, Instance};

/// Random but internally consistent solver state: arbitrary iterate and
/// scalar memory with `ᾱ` recomputed from scratch.
fn random_state(inst: &Instance, rng: &mut SplitMix64) -> SerialState {
    let obj = inst.objective();
    let mut state = SerialState::zeros(inst.data.n(), inst.data.dim());
    state.x = random_x(rng, inst.data.dim(), 1.5);
    for a in &mut state.alpha {
        *a = 2.0 * rng.next_f64() - 1.0;
    }
    state.alpha_bar = state.recompute_alpha_bar(&obj);
    state
}

/// Enumeration average of the per-step x-increment under a step function.
fn mean_increment<F>(inst: &Instance, state: &SerialState, mut step: F) -> Vec<f64>
where
    F: FnMut(&mut SerialState, usize),
{
    let n = inst.data.n();
    let d = inst.data.dim();
    let mut mean = vec![0.0f64; d];
    for i in 0..n {
        let mut s = state.clone();
        step(&mut s, i);
        for v in 0..d {
            mean[v] += (s.x[v] - state.x[v]) / n as f64;
        }
    }
    mean
}

#[test]
fn sparse_and_dense_increments_agree_in_expectation() {
    let mut rng = SplitMix64::new(11);
    let gamma = 0.05;
    for trial in 0..20 {
        let n = 3 + rng.below(8);
        let d = 2 + rng.below(n.min(6));
        let inst = Instance::new(random_instance(&mut rng, n, d, 1, d, true), 0.15);
        let obj = inst.objective();
        let state = random_state(&inst, &mut rng);

        let dense = mean_increment(&inst, &state, |s, i| saga_dense_step(&obj, s, i, gamma));
        let sparse = mean_increment(&inst, &state, |s, i| saga_sparse_step(&obj, s, i, gamma));
        for v in 0..d {
            assert!(
                (dense[v] - sparse[v]).abs() <= 1e-12,
                "trial {trial}, coord {v}: dense {} vs sparse {}",
                dense[v],
                sparse[v]
            );
        }
    }
}

#[test]
fn svrg_expected_inner_update_is_full_gradient_direction() {
    let mut rng = SplitMix64::new(22);
    let gamma = 0.07;
    for _ in 0..10 {
        let n = 3 + rng.below(8);
        let d = 2 + rng.below(n.min(6));
        let inst = Instance::new(random_instance(&mut rng, n, d, 1, d, true), 0.2);
        let obj = inst.objective();
        let x = random_x(&mut rng, d, 1.0);
        let reference = SvrgReference::new(&obj, &random_x(&mut rng, d, 1.0));

        let mut mean = vec![0.0f64; d];
        for i in 0..n {
            let mut xi = x.clone();
            svrg_step(&obj, &mut xi, &reference, i, gamma);
            for v in 0..d {
                mean[v] += (xi[v] - x[v]) / n as f64;
            }
        }
        let grad = obj.full_gradient(&x);
        for v in 0..d {
            let want = -gamma * grad[v];
            assert!(
                (mean[v] - want).abs() <= 1e-12,
                "coord {v}: mean {} vs -γ∇f {}",
                mean[v],
                want
            );
        }
    }
}

#[test]
fn solved_instance_is_a_fixed_point_in_expectation() {
    let mut rng = SplitMix64::new(33);
    let inst = Instance::new(random_instance(&mut rng, 15, 8, 1, 5, true), 0.2);
    let obj = inst.objective();
    let xs = reference_optimum(&obj, 1e-13, 20_000).unwrap();

    let mut state = SerialState::zeros(inst.data.n(), inst.data.dim());
    state.x = xs.clone();
    for i in 0..inst.data.n() {
        state.alpha[i] = obj.sigma_at(i, &xs);
    }
    state.alpha_bar = state.recompute_alpha_bar(&obj);

    let gamma = 0.1;
    for (name, mean) in [
        ("dense", mean_increment(&inst, &state, |s, i| saga_dense_step(&obj, s, i, gamma))),
        ("sparse", mean_increment(&inst, &state, |s, i| saga_sparse_step(&obj, s, i, gamma))),
    ] {
        let norm = mean.iter().map(|m| m.abs()).fold(0.0, f64::max);
        assert!(norm <= 1e-10, "{name} mean increment norm {norm}");
    }

    // A solved instance stays put: 10n further steps do not leave the basin.
    let f_star = obj.loss(&xs);
    let mut srng = SplitMix64::new(7);
    for _ in 0..10 * inst.data.n() {
        let i = srng.below(inst.data.n());
        saga_sparse_step(&obj, &mut state, i, gamma);
    }
    assert!(obj.loss(&state.x) - f_star <= 1e-10);
}

#[test]
fn first_saga_step_from_zero_memory_is_a_full_sgd_step() {
    let mut rng = SplitMix64::new(44);
    let inst = Instance::new(dense_instance(&mut rng, 6, 4), 0.3);
    let obj = inst.objective();
    let gamma = 0.2;

    let mut state = SerialState::zeros(6, 4);
    state.x = random_x(&mut rng, 4, 1.0);
    let x0 = state.x.clone();
    saga_dense_step(&obj, &mut state, 2, gamma);

    let sigma = obj.sigma_at(2, &x0);
    let (idx, val) = inst.data.row(2);
    let mut want = x0.clone();
    for (&v, &a) in idx.iter().zip(val) {
        let v = v as usize;
        want[v] -= gamma * (sigma * a + inst.lambda * want[v]);
    }
    for v in 0..4 {
        assert!((state.x[v] - want[v]).abs() <= 1e-15, "coord {v}");
    }
}

#[test]
fn single_sample_saga_is_gradient_descent_after_first_step() {
    let inst = Instance::new(
        asaga_core::data::SparseDataset::from_rows(1, &[(1.0, vec![(0, 1.0)])]).unwrap(),
        0.5,
    );
    let obj = inst.objective();
    let gamma = 0.3;
    let mut state = SerialState::zeros(1, 1);
    saga_dense_step(&obj, &mut state, 0, gamma);
    for _ in 0..5 {
        let x_before = state.x[0];
        let grad = obj.full_gradient(&[x_before])[0];
        saga_dense_step(&obj, &mut state, 0, gamma);
        // With n = 1 the memory is exact: α = σ(x), ᾱ = σ(x)·a, so the SAGA
        // step collapses to -γ∇f(x).
        assert!((state.x[0] - (x_before - gamma * grad)).abs() <= 1e-14);
    }
}

#[test]
fn sgd_step_edge_cases() {
    let inst = Instance::new(
        asaga_core::data::SparseDataset::from_rows(1, &[(1.0, vec![(0, 1.0)])]).unwrap(),
        1.0,
    );
    let obj = inst.objective();

    // γ = 0: unchanged.
    let mut state = SerialState::zeros(1, 1);
    state.x[0] = 0.7;
    sgd_step(&obj, &mut state, 0, 0.0);
    assert_eq!(state.x[0], 0.7);

    // From x = 0 with γ = 1: the regularizer term vanishes and the step is
    // -γ·σ(0)·a = +1/2.
    let mut state = SerialState::zeros(1, 1);
    sgd_step(&obj, &mut state, 0, 1.0);
    assert_eq!(state.x[0], 0.5);
}

#[test]
fn sparse_step_leaves_off_support_coordinates_untouched() {
    // Supports S_0 = {0}, S_1 = {0,1}: d_diag = (1, 2). A step on sample 0
    // must not move coordinate 1.
    let inst = Instance::new(
        asaga_core::data::SparseDataset::from_rows(
            2,
            &[(1.0, vec![(0, 1.0)]), (-1.0, vec![(0, 1.0), (1, 1.0)])],
        )
        .unwrap(),
        0.4,
    );
    let obj = inst.objective();
    assert_eq!(obj.profile().d_diag, vec![1.0, 2.0]);
    let mut rng = SplitMix64::new(5);
    let mut state = random_state(&inst, &mut rng);
    let x1 = state.x[1];
    saga_sparse_step(&obj, &mut state, 0, 0.1);
    assert_eq!(state.x[1], x1);
}

#[test]
fn dense_and_sparse_trajectories_coincide_on_dense_data() {
    let mut rng = SplitMix64::new(55);
    let inst = Instance::new(dense_instance(&mut rng, 30, 6), 1.0 / 30.0);
    let obj = inst.objective();
    let gamma = 0.4;

    let mut dense = SerialState::zeros(30, 6);
    let mut sparse = SerialState::zeros(30, 6);
    let mut sampler = SplitMix64::stream(99, 0);
    for t in 0..30 * 1 {
        let i = sampler.below(30);
        saga_dense_step(&obj, &mut dense, i, gamma);
        saga_sparse_step(&obj, &mut sparse, i, gamma);
        for v in 0..6 {
            assert!(
                (dense.x[v] - sparse.x[v]).abs() <= 1e-12,
                "iteration {t}, coord {v}"
            );
        }
    }
    assert_eq!(dense.x, sparse.x, "trajectories should in fact be bit-identical");
    assert_eq!(dense.alpha, sparse.alpha);
}

#[test]
fn lagged_with_flush_every_step_replays_dense_saga() {
    let mut rng = SplitMix64::new(66);
    let inst = Instance::new(random_instance(&mut rng, 20, 8, 1, 4, true), 0.05);
    let obj = inst.objective();
    let gamma = 0.3;

    let mut dense = SerialState::zeros(20, 8);
    let mut lagged = SerialState::zeros(20, 8);
    let mut lag = LagTracker::new(8);
    let mut sampler = SplitMix64::stream(4, 0);
    for t in 1..=40u64 {
        let i = sampler.below(20);
        saga_dense_step(&obj, &mut dense, i, gamma);
        saga_lagged_step(&obj, &mut lagged, &mut lag, i, gamma, t);
        flush_lag(&mut lagged, &mut lag, gamma, obj.lambda(), t);
        for v in 0..8 {
            assert!(
                (dense.x[v] - lagged.x[v]).abs() <= 1e-12,
                "iteration {t}, coord {v}: {} vs {}",
                dense.x[v],
                lagged.x[v]
            );
        }
    }
    assert_eq!(dense.x, lagged.x, "single-step catch-up is the literal dense step");
}

#[test]
fn lagged_epoch_matches_dense_after_final_flush() {
    let mut rng = SplitMix64::new(77);
    let inst = Instance::new(random_instance(&mut rng, 50, 20, 1, 3, true), 1.0 / 50.0);
    let obj = inst.objective();
    let gamma = 0.5;
    let steps = 50u64;

    let mut dense = SerialState::zeros(50, 20);
    let mut lagged = SerialState::zeros(50, 20);
    let mut lag = LagTracker::new(20);
    let mut s1 = SplitMix64::stream(12, 0);
    let mut s2 = SplitMix64::stream(12, 0);
    for t in 1..=steps {
        saga_dense_step(&obj, &mut dense, s1.below(50), gamma);
        saga_lagged_step(&obj, &mut lagged, &mut lag, s2.below(50), gamma, t);
    }
    flush_lag(&mut lagged, &mut lag, gamma, obj.lambda(), steps);
    assert!(lag.counters().iter().all(|&c| c == steps));
    for v in 0..20 {
        let denom = dense.x[v].abs().max(1e-9);
        assert!(
            (dense.x[v] - lagged.x[v]).abs() / denom <= 1e-8,
            "coord {v}: {} vs {}",
            dense.x[v],
            lagged.x[v]
        );
    }
}

#[test]
fn lagged_counters_accumulate_exactly_one_correction() {
    // Two coordinates, steps touching only coordinate 0: coordinate 1's
    // counter stays put and the final flush applies one closed-form
    // correction with multiplier k.
    let inst = Instance::new(
        asaga_core::data::SparseDataset::from_rows(
            2,
            &[(1.0, vec![(0, 1.0)]), (-1.0, vec![(0, 1.0), (1, 1.0)])],
        )
        .unwrap(),
        0.25,
    );
    let obj = inst.objective();
    let gamma = 0.2;
    let k = 7u64;

    let mut state = SerialState::zeros(2, 2);
    let mut lag = LagTracker::new(2);
    // Seed some non-trivial memory so ᾱ_1 ≠ 0, via one step on sample 1.
    saga_lagged_step(&obj, &mut state, &mut lag, 1, gamma, 1);
    let x1 = state.x[1];
    let abar1 = state.alpha_bar[1];
    for t in 2..=(1 + k) {
        saga_lagged_step(&obj, &mut state, &mut lag, 0, gamma, t);
    }
    assert_eq!(lag.counters()[1], 1);
    assert_eq!(state.x[1], x1, "deferred coordinate must not move yet");

    flush_lag(&mut state, &mut lag, gamma, obj.lambda(), 1 + k);
    assert_eq!(lag.counters()[1], 1 + k);
    let c = 1.0 - gamma * obj.lambda();
    let ck = c.powi(k as i32);
    let want = ck * x1 - abar1 * ((1.0 - ck) / obj.lambda());
    assert!((state.x[1] - want).abs() <= 1e-12 * want.abs().max(1.0));
}

#[test]
fn alpha_bar_stays_consistent_with_scalar_memory() {
    let mut rng = SplitMix64::new(88);
    let inst = Instance::new(random_instance(&mut rng, 40, 12, 1, 4, false), 1.0 / 40.0);
    let obj = inst.objective();
    let mut state = SerialState::zeros(40, 12);
    let mut sampler = SplitMix64::stream(3, 0);
    for _ in 0..5 * 40 {
        saga_sparse_step(&obj, &mut state, sampler.below(40), 0.6);
    }
    let recomputed = state.recompute_alpha_bar(&obj);
    for v in 0..12 {
        let denom = recomputed[v].abs().max(1e-12);
        assert!(
            (state.alpha_bar[v] - recomputed[v]).abs() / denom <= 1e-8,
            "coord {v}: maintained {} vs recomputed {}",
            state.alpha_bar[v],
            recomputed[v]
        );
    }
}

#[test]
fn run_serial_is_bitwise_deterministic() {
    let mut rng = SplitMix64::new(99);
    let inst = Instance::new(random_instance(&mut rng, 25, 10, 1, 4, false), 1.0 / 25.0);
    let obj = inst.objective();
    let config = SolverConfig {
        gamma: 0.5,
        epochs: 3,
        seed: 2024,
        target_subopt: None,
        record_every: 10,
    };
    let mut run = |method| {
        let mut records: Vec<RecordPoint> = Vec::new();
        let x = run_serial(method, &obj, &config, 0.0, None, |r| records.push(r)).unwrap();
        (records, x)
    };
    for method in [Method::Sgd, Method::Saga, Method::SparseSaga, Method::LaggedSaga, Method::Svrg]
    {
        let (r1, x1) = run(method);
        let (r2, x2) = run(method);
        assert_eq!(r1, r2, "{method}");
        assert_eq!(x1, x2, "{method}");
    }
}

#[test]
fn run_serial_rejects_async_methods_and_bad_configs() {
    let mut rng = SplitMix64::new(111);
    let inst = Instance::new(random_instance(&mut rng, 5, 3, 1, 2, false), 0.2);
    let obj = inst.objective();
    let good = SolverConfig { gamma: 0.1, epochs: 1, seed: 0, target_subopt: None, record_every: 1 };
    assert!(matches!(
        run_serial(Method::Asaga, &obj, &good, 0.0, None, |_| {}),
        Err(SolverError::NotSerial(Method::Asaga))
    ));
    let bad = SolverConfig { gamma: 0.0, ..good };
    assert!(matches!(
        run_serial(Method::Sgd, &obj, &bad, 0.0, None, |_| {}),
        Err(SolverError::InvalidConfig(_))
    ));
}

#[test]
fn oversized_step_is_reported_as_divergence_not_nan() {
    // One rarely used feature makes the projected regularizer aggressive:
    // the coordinate map has factor 1 - γλ/p_v, far below -1 at this γ.
    let mut rows: Vec<(f64, Vec<(u32, f64)>)> = (0..40)
        .map(|i| (if i % 2 == 0 { 1.0 } else { -1.0 }, vec![(0u32, 1.0)]))
        .collect();
    rows[3].1.push((1, 1.0));
    let inst = Instance::new(
        asaga_core::data::SparseDataset::from_rows(2, &rows).unwrap(),
        0.5,
    );
    let obj = inst.objective();
    let constants = asaga_core::problem_constants(&inst.data, inst.lambda).unwrap();
    let config = SolverConfig {
        gamma: 100.0 / (5.0 * constants.l_smooth),
        epochs: 50,
        seed: 1,
        target_subopt: None,
        record_every: 5,
    };
    let mut worst = 0.0f64;
    let err = run_serial(Method::SparseSaga, &obj, &config, 0.0, None, |r| {
        assert!(r.suboptimality.is_finite(), "no NaN may reach the trace");
        worst = worst.max(r.suboptimality);
    })
    .unwrap_err();
    match err {
        SolverError::Diverged { suboptimality, initial, .. } => {
            assert!(suboptimality.is_nan() || suboptimality >= 1e6 * initial);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn sparse_saga_contraction_beats_half_the_guaranteed_rate() {
    // n = 200, d = 50, κ ≈ 51 ≤ 100: at γ = 1/(5L) the guaranteed rate is
    // ρ(1) = (1/5)·min(1/n, 1/κ) = 1/1000 per iteration. The fitted
    // log-contraction must be at least half of that.
    let mut rng = SplitMix64::new(2222);
    let data = random_instance(&mut rng, 200, 50, 3, 8, true);
    let base = asaga_core::problem_constants(&data, 1e-12).unwrap();
    let lambda = (base.l_smooth - 1e-12) / 50.0;
    let inst = Instance::new(data, lambda);
    let obj = inst.objective();
    let constants = asaga_core::problem_constants(&inst.data, lambda).unwrap();
    assert!(constants.kappa <= 100.0, "κ = {}", constants.kappa);

    let xs = reference_optimum(&obj, 1e-12, 50_000).unwrap();
    let f_star = obj.loss(&xs);
    let config = SolverConfig {
        gamma: 1.0 / (5.0 * constants.l_smooth),
        epochs: 200,
        seed: 31,
        target_subopt: Some(1e-10),
        record_every: 200,
    };
    let mut records = Vec::new();
    run_serial(Method::SparseSaga, &obj, &config, f_star, None, |r| records.push(r)).unwrap();
    let last = records.last().unwrap();
    assert!(last.suboptimality <= 1e-10, "reached {:e}", last.suboptimality);

    // Least-squares slope of ln(subopt) against iteration over the linear
    // regime (below the burn-in, above the floor).
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.suboptimality > 1e-9 && r.suboptimality < 1e-1 && r.iteration > 0)
        .map(|r| (r.iteration as f64, r.suboptimality.ln()))
        .collect();
    assert!(pts.len() >= 5, "need enough points to fit, got {}", pts.len());
    let n = pts.len() as f64;
    let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let contraction = -slope;
    let rho = asaga_core::theory::serial_rate(200, constants.kappa, 1.0).unwrap();
    assert!(
        contraction >= 0.5 * rho,
        "fitted contraction {contraction:e} below half the guaranteed {rho:e}"
    );
}
