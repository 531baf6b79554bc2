use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vvrkbs::solver::{fit, grid_oracle, lmo, residual_duals, Loss, MeasurementOp, PenaltyMode, Problem, SolverOptions};
use vvrkbs::{Activation, AtomicVectorMeasure, Beta, DualPairSpec, FeatureMap, Norm};

fn problem(norm: Norm) -> Problem {
    let phi = FeatureMap::neural(Activation::Tanh, 1, 2.0, Beta::One).unwrap();
    let data = [(-0.9, [-0.6, 0.2]), (-0.3, [-0.25, 0.5]), (0.2, [0.15, 0.4]), (0.8, [0.55, -0.1])]
        .iter()
        .map(|(x, y)| (vec![*x], y.to_vec()))
        .collect();
    let spec = DualPairSpec::new(2, norm).unwrap();
    Problem::new(data, Loss::SquaredHalf, MeasurementOp::Identity, 0.02, phi, spec).unwrap()
}

fn solver(c: &mut Criterion) {
    let p = problem(Norm::L1);
    let empty = AtomicVectorMeasure::from_atoms(Vec::new(), 2, Norm::L1, 2.0).unwrap();
    let eta = residual_duals(&p, &empty).unwrap();
    c.bench_function("solver/lmo_32_restarts", |b| b.iter(|| lmo(&p, black_box(&eta), 32, 0).unwrap()));

    let mut group = c.benchmark_group("solver/fit");
    group.sample_size(10);
    for (name, norm, mode) in [("l1", Norm::L1, PenaltyMode::L1), ("group_l2", Norm::L2, PenaltyMode::Group)] {
        let p = problem(norm);
        let opts = SolverOptions {
            mode,
            restarts: 16,
            ..Default::default()
        };
        group.bench_function(name, |b| b.iter(|| fit(&p, &opts).unwrap()));
    }
    group.finish();

    let mut group = c.benchmark_group("solver/grid_oracle");
    group.sample_size(10);
    group.bench_function("49_nodes", |b| b.iter(|| grid_oracle(&p, 9, 200_000, 1e-10).unwrap()));
    group.finish();
}

criterion_group!(benches, solver);
criterion_main!(benches);
