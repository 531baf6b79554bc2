use super::*;
use crate::dual_pair::Norm;
use crate::feature::{Activation, Beta, Table};

fn spec(d: usize, norm: Norm) -> DualPairSpec {
    DualPairSpec::new(d, norm).unwrap()
}

fn synthetic(n: usize, dx: usize, dm: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = (0..dx).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = (0..dm).map(|_| rng.random_range(-1.0..1.0)).collect();
            (x, y)
        })
        .collect()
}

fn tanh_problem(data: Vec<(Vec<f64>, Vec<f64>)>, d: usize, norm: Norm, lambda: f64) -> Problem {
    let dx = data[0].0.len();
    let f = FeatureMap::neural(Activation::Tanh, dx, 1.5, Beta::One).unwrap();
    Problem::new(data, Loss::SquaredHalf, MeasurementOp::Identity, lambda, f, spec(d, norm)).unwrap()
}

#[test]
fn objective_at_zero_is_half_mean_square() {
    let data = vec![(vec![0.1], vec![1.0, 2.0]), (vec![0.4], vec![-3.0, 0.5])];
    let p = tanh_problem(data, 2, Norm::L2, 0.3);
    let zero = AtomicVectorMeasure::zero(2, Norm::L2, 1.5);
    let want = (0.5 * 5.0 + 0.5 * 9.25) / 2.0;
    assert!((objective(&p, &zero).unwrap() - want).abs() < 1e-15);
}

#[test]
fn perfect_single_atom_fit_without_penalty_is_zero() {
    let f = FeatureMap::gaussian(1.0, 1, 2.0, Beta::One).unwrap();
    let mu = AtomicVectorMeasure::dirac(vec![0.3], vec![2.0, -1.0], Norm::L1, 2.0).unwrap();
    let data: Vec<_> = [vec![0.0], vec![0.7]]
        .into_iter()
        .map(|x| {
            let y = mu.integrate(&f, &x).unwrap();
            (x, y)
        })
        .collect();
    let p = Problem::new(data, Loss::SquaredHalf, MeasurementOp::Identity, 0.0, f, spec(2, Norm::L1)).unwrap();
    assert_eq!(objective(&p, &mu).unwrap(), 0.0);
}

#[test]
fn objective_on_tabulated_instance_matches_hand_sum() {
    // φ(x, w) on nodes x ∈ {0, 1}, w ∈ {0, 1}.
    let table = Table {
        x_range: [0.0, 1.0],
        w_range: [0.0, 1.0],
        values: vec![vec![1.0, 0.5], vec![-2.0, 3.0]],
    };
    let f = FeatureMap::tabulated(table, 1.0, Beta::One).unwrap();
    let data = vec![(vec![0.0], vec![1.0]), (vec![1.0], vec![-1.0])];
    let p = Problem::new(data, Loss::SquaredHalf, MeasurementOp::Identity, 0.1, f, spec(1, Norm::L1)).unwrap();
    let mu = AtomicVectorMeasure::from_atoms(
        vec![Atom::new(vec![0.0], vec![2.0]), Atom::new(vec![1.0], vec![-1.0])],
        1,
        Norm::L1,
        1.0,
    )
    .unwrap();
    // Predictions: x=0: 1·2 + 0.5·(−1) = 1.5; x=1: −2·2 + 3·(−1) = −7.
    // (½(0.5)² + ½(6)²)/2 + 0.1·3 = (0.125 + 18)/2 + 0.3 = 9.3625
    assert!((objective(&p, &mu).unwrap() - 9.3625).abs() < 1e-14);
}

#[test]
fn objective_rejects_mismatched_measure() {
    let p = tanh_problem(vec![(vec![0.1], vec![1.0])], 1, Norm::L1, 0.1);
    let bad = AtomicVectorMeasure::zero(2, Norm::L1, 1.5);
    assert!(matches!(objective(&p, &bad), Err(Error::DimensionMismatch { .. })));
    let bad_norm = AtomicVectorMeasure::zero(1, Norm::L2, 1.5);
    assert!(objective(&p, &bad_norm).is_err());
}

#[test]
fn measurement_is_linear() {
    let m = MeasurementOp::Functionals {
        functionals: vec![vec![1.0, -2.0], vec![0.5, 0.25]],
    };
    let u = [0.75, -1.5];
    let v = [2.0, 4.0];
    let alpha = 2.0;
    let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + b).collect();
    let lhs = m.apply(&combo);
    let rhs: Vec<f64> = m.apply(&u).iter().zip(m.apply(&v)).map(|(a, b)| alpha * a + b).collect();
    assert_eq!(lhs, rhs);
    // ⟨M u, r⟩ = ⟨u, M* r⟩
    let r = [0.3, -0.7];
    let l: f64 = m.apply(&u).iter().zip(&r).map(|(a, b)| a * b).sum();
    let rr: f64 = m.adjoint(&r, 2).iter().zip(&u).map(|(a, b)| a * b).sum();
    assert!((l - rr).abs() < 1e-15);
}

#[test]
fn huber_gradient_matches_finite_differences() {
    let loss = Loss::Huber { delta: 0.5 };
    let y = [0.1, -0.2, 0.0];
    let p = [0.3, 1.4, -2.0];
    let g = loss.grad(&p, &y);
    let h = 1e-6;
    for k in 0..3 {
        let mut a = p;
        let mut b = p;
        a[k] += h;
        b[k] -= h;
        assert!((g[k] - (loss.value(&a, &y) - loss.value(&b, &y)) / (2.0 * h)).abs() < 1e-8);
    }
}

#[test]
fn public_lmo_single_point_residual_picks_first_axis() {
    let p = tanh_problem(vec![(vec![0.4], vec![1.0, 0.0])], 2, Norm::L1, 0.1);
    let r = lmo(&p, &[vec![1.0, 0.0]], 8, 0).unwrap();
    assert_eq!(r.direction[1], 0.0);
    assert_eq!(r.direction[0].abs(), 1.0);
    let zero = lmo(&p, &[vec![0.0, 0.0]], 8, 0).unwrap();
    assert_eq!(zero.score, 0.0);
}

#[test]
fn one_sample_fit_matches_soft_threshold() {
    // With a Gaussian bump sup_w φ(x, w) = 1 (at w = x), the problem reduces
    // to min_p ½(p − y)² + λ|p|, so p = soft(y, λ).
    let f = FeatureMap::gaussian(0.7, 1, 1.0, Beta::One).unwrap();
    let (y, lambda) = (1.0, 0.2);
    let p = Problem::new(vec![(vec![0.25], vec![y])], Loss::SquaredHalf, MeasurementOp::Identity, lambda, f, spec(1, Norm::L1))
        .unwrap();
    let state = fit(&p, &SolverOptions::default()).unwrap();
    assert!(state.converged);
    let pred = state.measure.integrate(&p.feature, &[0.25]).unwrap()[0];
    let p_star = 0.8;
    let obj_star = 0.5 * (p_star - y) * (p_star - y) + lambda * p_star;
    assert!((pred - p_star).abs() < 1e-5, "prediction {pred}");
    assert!((state.objective() - obj_star).abs() < 1e-8, "{}", state.objective());
    assert!((objective(&p, &state.measure).unwrap() - state.objective()).abs() < 1e-12);
}

#[test]
fn lambda_above_lambda_max_returns_zero_measure() {
    let p = tanh_problem(synthetic(4, 1, 2, 5), 2, Norm::L2, 1.0);
    let lmax = lambda_max(&p, 101).unwrap();
    let state = fit(&p.clone().with_lambda(1.01 * lmax), &SolverOptions::default()).unwrap();
    assert!(state.measure.is_empty());
    assert!(state.converged);
    assert_eq!(state.objective_history.len(), 1);
    // Grid-restricted: λ = λ_max exactly suffices.
    let g = p.clone().restricted_to_grid(9);
    let lmax_g = lambda_max(&g, 9).unwrap();
    assert!(fit(&g.with_lambda(lmax_g), &SolverOptions::default()).unwrap().measure.is_empty());
    // Small λ gives a non-trivial solution.
    assert!(!fit(&p.with_lambda(0.5 * lmax), &SolverOptions::default()).unwrap().measure.is_empty());
}

#[test]
fn history_descends_and_l1_atoms_are_axis_aligned() {
    let data = synthetic(5, 2, 3, 11);
    let p = tanh_problem(data, 3, Norm::L1, 0.05);
    let state = fit(&p, &SolverOptions::default()).unwrap();
    for w in state.objective_history.windows(2) {
        assert!(w[1] <= w[0], "{:?}", state.objective_history);
    }
    assert!(state.converged, "certificate {}", state.certificate);
    assert!(state.measure.coalesce(crate::measure::MERGE_TOL).len() <= 5 * 3);
    for a in state.measure.atoms() {
        let nz = a.c.iter().filter(|c| c.abs() > 1e-10 * Norm::L1.value(&a.c)).count();
        assert_eq!(nz, 1, "{:?}", a.c);
    }
    assert!((objective(&p, &state.measure).unwrap() - state.objective()).abs() < 1e-10);
}

#[test]
fn group_mode_converges_with_sparse_measure() {
    let data = synthetic(4, 1, 2, 3);
    let p = tanh_problem(data, 2, Norm::L2, 0.02);
    let opts = SolverOptions {
        mode: PenaltyMode::Group,
        ..Default::default()
    };
    let state = fit(&p, &opts).unwrap();
    assert!(state.converged);
    assert!(state.measure.coalesce(crate::measure::MERGE_TOL).len() <= 4 * 2);
    for w in state.objective_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn fit_is_deterministic_given_seed() {
    let p = tanh_problem(synthetic(4, 2, 2, 8), 2, Norm::L2, 0.03);
    let a = fit(&p, &SolverOptions::default()).unwrap();
    let b = fit(&p, &SolverOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn grid_oracle_single_node_is_scalar_lasso() {
    let f = FeatureMap::gaussian(1.0, 1, 1.0, Beta::One).unwrap();
    let (x, y, lambda) = (0.5, 1.3, 0.1);
    let p = Problem::new(vec![(vec![x], vec![y])], Loss::SquaredHalf, MeasurementOp::Identity, lambda, f, spec(1, Norm::L1))
        .unwrap();
    let r = grid_oracle(&p, 1, 10_000, 1e-13).unwrap();
    assert_eq!(r.grid, vec![vec![0.0]]);
    // min_c ½(φ c − y)² + λ|c|  ⇒  c = soft(φ y, λ) / φ².
    let phi = (-x * x / 2.0_f64).exp();
    let c = (phi * y - lambda) / (phi * phi);
    let obj = 0.5 * (phi * c - y).powi(2) + lambda * c.abs();
    assert!((r.coefficients[0][0] - c).abs() < 1e-10);
    assert!((r.objective - obj).abs() < 1e-12);
}

#[test]
fn grid_oracle_huge_lambda_kills_everything() {
    let p = tanh_problem(synthetic(3, 1, 2, 1), 2, Norm::L2, 1e6);
    let r = grid_oracle(&p, 9, 1000, 1e-10).unwrap();
    assert!(r.coefficients.iter().flatten().all(|c| *c == 0.0));
    let zero = AtomicVectorMeasure::zero(2, Norm::L2, 1.5);
    assert_eq!(r.objective, objective(&p, &zero).unwrap());
}

#[test]
fn grid_oracle_descends_and_is_reproducible() {
    let p = tanh_problem(synthetic(5, 1, 2, 4), 2, Norm::L1, 0.01);
    let a = grid_oracle(&p, 9, 50_000, 1e-11).unwrap();
    for w in a.history.windows(2) {
        assert!(w[1] <= w[0]);
    }
    let b = grid_oracle(&p, 9, 50_000, 1e-11).unwrap();
    assert!((a.objective - b.objective).abs() <= 1e-8 * a.objective.abs());
}

#[test]
fn grid_restricted_fit_matches_oracle() {
    for (norm, mode) in [(Norm::L1, PenaltyMode::L1), (Norm::L2, PenaltyMode::Group), (Norm::L2, PenaltyMode::L1)] {
        let p = tanh_problem(synthetic(4, 1, 2, 21), 2, norm, 0.01).restricted_to_grid(9);
        let opts = SolverOptions {
            mode,
            ..Default::default()
        };
        let state = fit(&p, &opts).unwrap();
        let oracle = grid_oracle(&p, 9, 200_000, 1e-12).unwrap();
        let fit_obj = objective(&p, &state.measure).unwrap();
        let gap = (fit_obj - oracle.objective).abs() / oracle.objective;
        assert!(gap <= 1e-4, "{norm:?}/{mode:?}: {fit_obj} vs {}", oracle.objective);
    }
}

#[test]
fn permuting_functionals_leaves_objective_unchanged() {
    let data = synthetic(4, 1, 3, 6);
    let fs = [vec![1.0, 0.0], vec![0.5, -1.0], vec![0.2, 0.7]];
    let f = FeatureMap::neural(Activation::Tanh, 1, 1.5, Beta::One).unwrap();
    let make = |perm: [usize; 3]| {
        let m = MeasurementOp::Functionals {
            functionals: perm.iter().map(|&i| fs[i].clone()).collect(),
        };
        let d: Vec<_> = data
            .iter()
            .map(|(x, y)| (x.clone(), perm.iter().map(|&i| y[i]).collect()))
            .collect();
        Problem::new(d, Loss::SquaredHalf, m, 0.02, f.clone(), spec(2, Norm::L2)).unwrap()
    };
    let opts = SolverOptions::default();
    let a = fit(&make([0, 1, 2]), &opts).unwrap();
    let b = fit(&make([2, 0, 1]), &opts).unwrap();
    assert!((a.objective() - b.objective()).abs() <= 1e-10, "{} vs {}", a.objective(), b.objective());
}

#[test]
fn options_and_lambda_are_validated() {
    let p = tanh_problem(vec![(vec![0.1], vec![1.0])], 1, Norm::L1, 0.0);
    assert!(matches!(fit(&p, &SolverOptions::default()), Err(Error::InvalidArgument(_))));
    let p = p.with_lambda(0.1);
    let opts = SolverOptions {
        max_atoms: 0,
        ..Default::default()
    };
    assert!(fit(&p, &opts).is_err());
    assert!(Problem::new(vec![], Loss::SquaredHalf, MeasurementOp::Identity, 0.1, p.feature.clone(), spec(1, Norm::L1)).is_err());
}

#[test]
fn exported_network_matches_measure_evaluation() {
    let p = tanh_problem(synthetic(5, 2, 2, 13), 2, Norm::L2, 0.02);
    let state = fit(&p, &SolverOptions::default()).unwrap();
    let net = export_network(&state.measure, &p.feature).unwrap();
    assert_eq!(net.hidden_units(), state.measure.len());
    for (x, _) in &p.data {
        let want = state.measure.integrate(&p.feature, x).unwrap();
        let got = net.evaluate(x).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300) || (a - b).abs() < 1e-15);
        }
    }
}
