//! Seeded property suites for every module's invariants.
//!
//! Each suite draws random instances, measures the worst violation of one
//! identity or inequality and compares it with a fixed tolerance. The
//! generators are public so that tests can reuse the same distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dual_pair::{DualPairSpec, Norm, TwinOperator};
use crate::error::Result;
use crate::feature::{Activation, Beta, FeatureMap};
use crate::measure::{Atom, MERGE_TOL};
use crate::numeric::{dot, rel_err, rel_err_vec};
use crate::operator_learning::{
    deeponet_embed, deeponet_evaluate, function_form_tv_upper, hyper_evaluate, hyper_evaluate_function_form,
    hyper_term_scale, measurement_factorization, weight_form_tv, BranchCoefficients, HyperAtom, HyperModel,
};
pub use crate::rkbs::{random_in_ball, random_measure, random_vec};

/// Input/target pairs.
pub type Samples = Vec<(Vec<f64>, Vec<f64>)>;
use crate::rkbs::{rkhs_fit, verify_reproducing_with_fault, RkbsFunction};
use crate::rkbs::{ScalarKernel, REPRODUCING_TOL};
use crate::solver::{export_network, fit, Loss, MeasurementOp, PenaltyMode, Problem, SolverOptions};

/// Worst observed violation of one invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub name: &'static str,
    pub trials: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl InvariantReport {
    fn new(name: &'static str, trials: usize, max_error: f64, tolerance: f64) -> Self {
        Self {
            name,
            trials,
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Negative control: perturbs the kernel-side pairings so that the
    /// reproducing suite must fail.
    pub inject_fault: bool,
}

/// Perturbation used by the fault-injection negative control.
pub const INJECTED_FAULT: f64 = 1e-6;
/// Tolerance of the central-difference gradient check.
pub const GRADIENT_TOL: f64 = 1e-4;
/// Tolerance of exact algebraic identities evaluated two ways.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance of the twin-norm identities.
pub const TWIN_TOL: f64 = 1e-10;
/// Residual bound for `λ = 0` kernel interpolation.
pub const INTERPOLATION_TOL: f64 = 1e-6;

const SMOOTH: [Activation; 3] = [Activation::Tanh, Activation::Sigmoid, Activation::GaussianRbf];
const ALL_ACTIVATIONS: [Activation; 4] = [Activation::Relu, Activation::Tanh, Activation::Sigmoid, Activation::GaussianRbf];
const BETAS: [Beta; 3] = [Beta::SmoothBump, Beta::Hard, Beta::One];
const NORMS: [Norm; 3] = [Norm::L1, Norm::L2, Norm::LInf];

/// A random neural or Gaussian feature on `ℝ^dx`.
pub fn random_feature<R: Rng>(rng: &mut R, dx: usize) -> FeatureMap {
    let radius = rng.random_range(0.5..2.0);
    let beta = BETAS[rng.random_range(0..BETAS.len())];
    if rng.random_range(0..5) == 4 {
        FeatureMap::gaussian(rng.random_range(0.5..2.0), dx, radius, beta).expect("valid gaussian feature")
    } else {
        let act = ALL_ACTIVATIONS[rng.random_range(0..ALL_ACTIVATIONS.len())];
        FeatureMap::neural(act, dx, radius, beta).expect("valid neural feature")
    }
}

/// A random neural feature with a smooth activation and smooth truncation.
pub fn random_smooth_feature<R: Rng>(rng: &mut R, dx: usize) -> FeatureMap {
    let act = SMOOTH[rng.random_range(0..SMOOTH.len())];
    let beta = if rng.random_bool(0.5) { Beta::SmoothBump } else { Beta::One };
    FeatureMap::neural(act, dx, rng.random_range(0.5..2.0), beta).expect("valid neural feature")
}

pub fn random_spec<R: Rng>(rng: &mut R, d: usize) -> DualPairSpec {
    DualPairSpec::new(d, NORMS[rng.random_range(0..NORMS.len())]).expect("positive dimension")
}

/// A random primal- or dual-side function with `d ≤ 4`, `dx ≤ 3` and at
/// most 10 atoms.
pub fn random_rkbs_function<R: Rng>(rng: &mut R) -> RkbsFunction {
    let d = rng.random_range(1..=4);
    let dx = rng.random_range(1..=3);
    let atoms = rng.random_range(0..=10);
    let phi = random_feature(rng, dx);
    let spec = random_spec(rng, d);
    if rng.random_bool(0.5) {
        let mu = random_measure(rng, atoms, phi.weight_dim(), d, spec.primal_norm, phi.radius());
        RkbsFunction::primal(mu, phi, spec).expect("consistent primal function")
    } else {
        let rho = random_measure(rng, atoms, dx, d, spec.dual_norm(), 2.0);
        RkbsFunction::dual(rho, phi, spec).expect("consistent dual function")
    }
}

/// A random hyper model whose atoms share outer locations and include
/// negated inner weights, so that grouping and exact feature equivalences
/// are exercised.
pub fn random_hyper_model<R: Rng>(rng: &mut R) -> HyperModel {
    let dz = rng.random_range(1..=3);
    let dx = rng.random_range(1..=3);
    let d = rng.random_range(1..=3);
    let phi = random_feature(rng, dz);
    let psi = random_feature(rng, dx);
    let spec = random_spec(rng, d);
    let ws: Vec<Vec<f64>> = (0..rng.random_range(1..=3))
        .map(|_| random_in_ball(rng, phi.weight_dim(), phi.radius()))
        .collect();
    let mut thetas: Vec<Vec<f64>> = Vec::new();
    let atoms = (0..rng.random_range(0..=8))
        .map(|_| {
            let theta = match (thetas.last(), rng.random_range(0..3)) {
                (Some(t), 0) => t.iter().map(|v| -v).collect(),
                (Some(t), 1) => t.clone(),
                _ => random_in_ball(rng, psi.weight_dim(), psi.radius()),
            };
            thetas.push(theta.clone());
            HyperAtom {
                a: rng.random_range(-2.0..2.0),
                w: ws[rng.random_range(0..ws.len())].clone(),
                theta,
                v: random_vec(rng, d),
            }
        })
        .collect();
    HyperModel::new(atoms, phi, psi, spec).expect("generated atoms lie in their balls")
}

/// A random DeepONet instance: basis functions over `X × Θ`, branch
/// coefficients over `Ω`, and the outer feature.
pub fn random_deeponet<R: Rng>(rng: &mut R) -> (Vec<RkbsFunction>, Vec<BranchCoefficients>, FeatureMap) {
    let dz = rng.random_range(1..=3);
    let dx = rng.random_range(1..=2);
    let d = rng.random_range(1..=3);
    let phi = random_feature(rng, dz);
    let psi = random_feature(rng, dx);
    let spec = random_spec(rng, d);
    let nb = rng.random_range(1..=3);
    let basis = (0..nb)
        .map(|_| {
            let atoms = rng.random_range(1..=4);
            let mu = random_measure(rng, atoms, psi.weight_dim(), d, spec.primal_norm, psi.radius());
            RkbsFunction::primal(mu, psi.clone(), spec).expect("consistent basis function")
        })
        .collect();
    let coeffs = (0..nb)
        .map(|_| {
            (0..rng.random_range(1..=3))
                .map(|_| (rng.random_range(-1.0..1.0), random_in_ball(rng, phi.weight_dim(), phi.radius())))
                .collect()
        })
        .collect();
    (basis, coeffs, phi)
}

fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> TwinOperator {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_vec(rng, n)).collect();
    TwinOperator::from_rows(&rows).expect("square rows")
}

fn suite_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn pairing_bound(trials: usize, seed: u64) -> InvariantReport {
    let mut rng = suite_rng(seed, 1);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let dim = rng.random_range(1..=5);
        let spec = random_spec(&mut rng, dim);
        let u = random_vec(&mut rng, spec.dim);
        let ud = random_vec(&mut rng, spec.dim);
        let lhs = spec.pair(&ud, &u).expect("matching dims").abs();
        let rhs = spec.dual_norm().value(&ud) * spec.primal_norm.value(&u);
        worst = worst.max((lhs - rhs) / rhs.max(f64::MIN_POSITIVE));
    }
    InvariantReport::new("dual_pair.pairing_bound", trials, worst.max(0.0), IDENTITY_TOL)
}

fn witness_attains(trials: usize, seed: u64) -> InvariantReport {
    let mut rng = suite_rng(seed, 2);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let dim = rng.random_range(1..=5);
        let spec = random_spec(&mut rng, dim);
        let u = random_vec(&mut rng, spec.dim);
        let w = spec.dual_witness(&u).expect("matching dims");
        let n = spec.primal_norm.value(&u);
        worst = worst.max(rel_err(dot(&w, &u), n, n));
        worst = worst.max((spec.dual_norm().value(&w) - 1.0).abs());
    }
    InvariantReport::new("dual_pair.witness_attains_norm", trials, worst, IDENTITY_TOL)
}

fn twin_norm(trials: usize, seed: u64) -> InvariantReport {
    let mut rng = suite_rng(seed, 3);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let n = rng.random_range(1..=4);
        let spec = random_spec(&mut rng, n);
        let t = random_matrix(&mut rng, n);
        let twin = t.twin_norm(&spec).expect("square operator");
        let p = t.primal_operator_norm(&spec);
        let q = t.dual_operator_norm(&spec);
        worst = worst.max(rel_err(twin, p, 1.0)).max(rel_err(twin, q, 1.0));
    }
    InvariantReport::new("dual_pair.twin_norm_identity", trials, worst, TWIN_TOL)
}

fn coalesce_preserves_action(trials: usize, seed: u64) -> InvariantReport {
    let mut rng = suite_rng(seed, 4);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let phi = random_feature(&mut rng, 2);
        let spec = random_spec(&mut rng, 2);
        let mut mu = random_measure(&mut rng, 5, phi.weight_dim(), 2, spec.primal_norm, phi.radius());
        // duplicate a location so that merging actually happens
        if let Some(a) = mu.atoms().first().cloned() {
            mu.push(Atom::new(a.w, random_vec(&mut rng, 2))).expect("same location");
        }
        let x = random_in_ball(&mut rng, 2, 2.0);
        let merged = mu.coalesce(MERGE_TOL);
        let a = mu.integrate(&phi, &x).expect("dims");
        let b = merged.integrate(&phi, &x).expect("dims");
        let scale: f64 = mu.atoms().iter().map(|at| phi.value(&x, &at.w).abs() * Norm::LInf.value(&at.c)).sum();
        worst = worst.max(rel_err_vec(&a, &b, scale));
    }
    InvariantReport::new("measure.coalesce_preserves_action", trials, worst, IDENTITY_TOL)
}

fn tv_subadditive(trials: usize, seed: u64) -> InvariantReport {
    let mut rng = suite_rng(seed, 5);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let norm = NORMS[rng.random_range(0..3)];
        let mu = random_measure(&mut rng, 4, 2, 3, norm, 1.0);
        let mut nu = random_measure(&mut rng, 3, 2, 3, norm, 1.0);
        if let Some(a) = mu.atoms().first() {
            nu.push(Atom::new(a.w.clone(), random_vec(&mut rng, 3))).expect("same location");
        }
        let sum = mu.combine(1.0, &nu).expect("compatible measures");
        let excess = sum.total_variation() - (mu.total_variation() + nu.total_variation());
        worst = worst.max(excess / sum.atomwise_mass().max(1.0));
    }
    InvariantReport::new("measure.tv_subadditive", trials, worst.max(0.0), IDENTITY_TOL)
}

fn integration_linear(trials: usize, seed: u64) -> InvariantReport {
    let mut rng = suite_rng(seed, 6);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let phi = random_feature(&mut rng, 2);
        let mu = random_measure(&mut rng, 4, phi.weight_dim(), 2, Norm::L2, phi.radius());
        let nu = random_measure(&mut rng, 4, phi.weight_dim(), 2, Norm::L2, phi.radius());
        let alpha = rng.random_range(-3.0..3.0);
        let x = random_in_ball(&mut rng, 2, 2.0);
        let lhs = mu.scale(alpha).combine(1.0, &nu).expect("compatible").integrate(&phi, &x).expect("dims");
        let a = mu.integrate(&phi, &x).expect("dims");
        let b = nu.integrate(&phi, &x).expect("dims");
        let rhs: Vec<f64> = a.iter().zip(&b).map(|(p, q)| alpha * p + q).collect();
        let scale = alpha.abs() * Norm::LInf.value(&a) + Norm::LInf.value(&b) + mu.atomwise_mass() + nu.atomwise_mass();
        worst = worst.max(rel_err_vec(&lhs, &rhs, scale));
    }
    InvariantReport::new("measure.integration_linear", trials, worst, IDENTITY_TOL)
}

/// Central-difference check of `∇_w φ` on smooth features.
pub fn gradient_check_error<R: Rng>(rng: &mut R) -> f64 {
    let dx = rng.random_range(1..=3);
    let phi = random_smooth_feature(rng, dx);
    let x = random_in_ball(rng, dx, 2.0);
    let w = random_in_ball(rng, phi.weight_dim(), phi.radius());
    let g = phi.grad_phi_w(&x, &w).expect("dims");
    let h = 1e-6;
    let mut worst = 0.0_f64;
    for k in 0..w.len() {
        let mut wp = w.clone();
        let mut wm = w.clone();
        wp[k] += h;
        wm[k] -= h;
        let fd = (phi.value(&x, &wp) - phi.value(&x, &wm)) / (2.0 * h);
        worst = worst.max((fd - g[k]).abs());
    }
    worst
}

fn gradient_check(trials: usize, seed: u64) -> InvariantReport {
    let mut rng = suite_rng(seed, 7);
    let worst = (0..trials).map(|_| gradient_check_error(&mut rng)).fold(0.0, f64::max);
    InvariantReport::new("feature.gradient_check", trials, worst, GRADIENT_TOL)
}

fn reproducing(trials: usize, seed: u64, fault: bool) -> Result<InvariantReport> {
    let mut rng = suite_rng(seed, 8);
    let mut worst = 0.0_f64;
    let delta = if fault { INJECTED_FAULT } else { 0.0 };
    for _ in 0..trials {
        let f = random_rkbs_function(&mut rng);
        let r = verify_reproducing_with_fault(&f, 1, rng.random(), delta)?;
        worst = worst.max(r.max_rel_error);
    }
    Ok(InvariantReport::new("rkbs.reproducing_identities", trials, worst, REPRODUCING_TOL))
}

/// The reproducing suite restricted to one feature and space, over random
/// primal and dual measures with up to 10 atoms.
pub fn reproducing_for(feature: &FeatureMap, spec: &DualPairSpec, opts: &VerifyOptions) -> Result<InvariantReport> {
    let mut rng = suite_rng(opts.seed, 14);
    let delta = if opts.inject_fault { INJECTED_FAULT } else { 0.0 };
    let trials = opts.trials.max(1);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let atoms = rng.random_range(0..=10);
        let f = if rng.random_bool(0.5) {
            let mu = random_measure(&mut rng, atoms, feature.weight_dim(), spec.dim, spec.primal_norm, feature.radius());
            RkbsFunction::primal(mu, feature.clone(), *spec)?
        } else {
            let rho = random_measure(&mut rng, atoms, feature.input_dim(), spec.dim, spec.dual_norm(), 2.0);
            RkbsFunction::dual(rho, feature.clone(), *spec)?
        };
        let r = verify_reproducing_with_fault(&f, 1, rng.random(), delta)?;
        worst = worst.max(r.max_rel_error);
    }
    Ok(InvariantReport::new("config.reproducing_identities", trials, worst, REPRODUCING_TOL))
}

fn b_norm_bracket(trials: usize, seed: u64) -> Result<InvariantReport> {
    let mut rng = suite_rng(seed, 9);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let dx = rng.random_range(1..=3);
        let d = rng.random_range(1..=3);
        let phi = random_feature(&mut rng, dx);
        let spec = random_spec(&mut rng, d);
        let atoms = rng.random_range(0..=6);
        let mu = random_measure(&mut rng, atoms, phi.weight_dim(), d, spec.primal_norm, phi.radius());
        let f = RkbsFunction::primal(mu, phi, spec)?;
        let probes: Vec<Vec<f64>> = (0..4).map(|_| random_in_ball(&mut rng, dx, 2.0)).collect();
        let (lo, hi) = f.b_norm_interval(&probes)?;
        worst = worst.max((lo - hi) / hi.max(1.0));
        worst = worst.max(hi - f.measure().total_variation() * (1.0 + IDENTITY_TOL));
    }
    Ok(InvariantReport::new("rkbs.b_norm_bracket", trials, worst.max(0.0), IDENTITY_TOL))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// A distinct-point Gaussian-kernel interpolation instance with `N ≤ n_max`:
/// points are separated by at least `0.1` in `[-2, 2]^dx` and the bandwidth
/// equals the smallest pairwise distance, so that the Gram matrix stays
/// well conditioned.
pub fn random_interpolation_instance<R: Rng>(rng: &mut R, n_max: usize) -> (Samples, ScalarKernel) {
    let n = rng.random_range(1..=n_max.max(1));
    let dx = rng.random_range(1..=3);
    let d = rng.random_range(1..=3);
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(n);
    while xs.len() < n {
        let x: Vec<f64> = (0..dx).map(|_| rng.random_range(-2.0..2.0)).collect();
        if xs.iter().all(|p| euclid(p, &x) >= 0.1) {
            xs.push(x);
        }
    }
    let mut sep = f64::INFINITY;
    for (i, p) in xs.iter().enumerate() {
        for q in &xs[..i] {
            sep = sep.min(euclid(p, q));
        }
    }
    let bandwidth = if sep.is_finite() { sep } else { 1.0 };
    let data = xs.into_iter().map(|x| (x, random_vec(rng, d))).collect();
    (data, ScalarKernel::GaussianRbf { bandwidth })
}

/// Largest `|f(x_n) - y_n|` of the `λ = 0` fit.
pub fn interpolation_residual(data: &[(Vec<f64>, Vec<f64>)], kernel: ScalarKernel) -> Result<f64> {
    let model = rkhs_fit(data, kernel, 0.0)?;
    let mut worst = 0.0_f64;
    for (x, y) in data {
        let p = model.predict(x)?;
        worst = worst.max(p.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok(worst)
}

fn rkhs_interpolation(trials: usize, seed: u64) -> Result<InvariantReport> {
    let mut rng = suite_rng(seed, 10);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let (data, kernel) = random_interpolation_instance(&mut rng, 8);
        worst = worst.max(interpolation_residual(&data, kernel)?);
    }
    Ok(InvariantReport::new("rkbs.rkhs_interpolation", trials, worst, INTERPOLATION_TOL))
}

fn tiny_problem<R: Rng>(rng: &mut R, norm: Norm) -> Problem {
    let n = rng.random_range(1..=3);
    let d = rng.random_range(1..=2);
    let phi = FeatureMap::neural(Activation::Tanh, 1, 1.5, Beta::One).expect("valid feature");
    let data = (0..n).map(|_| (vec![rng.random_range(-1.0..1.0)], random_vec(rng, d))).collect();
    let spec = DualPairSpec::new(d, norm).expect("positive dimension");
    Problem::new(data, Loss::SquaredHalf, MeasurementOp::Identity, 0.05, phi, spec).expect("consistent problem")
}

/// Descent, sparsity and extremality on a few tiny fits (one per hundred
/// trials, at least one).
fn solver_suites(trials: usize, seed: u64) -> Result<Vec<InvariantReport>> {
    let mut rng = suite_rng(seed, 11);
    let fits = trials.div_ceil(100);
    let (mut ascent, mut excess, mut off_axis) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..fits {
        let p = tiny_problem(&mut rng, Norm::L1);
        let opts = SolverOptions {
            restarts: 8,
            seed: seed.wrapping_add(k as u64),
            mode: PenaltyMode::L1,
            ..Default::default()
        };
        let st = fit(&p, &opts)?;
        for w in st.objective_history.windows(2) {
            ascent = ascent.max(w[1] - w[0]);
        }
        if st.converged {
            let count = st.measure.coalesce(MERGE_TOL).len();
            excess = excess.max(count as f64 - (p.n() * p.meas_dim()) as f64);
        }
        for a in st.measure.atoms() {
            let m = Norm::LInf.value(&a.c);
            off_axis = off_axis.max((Norm::L1.value(&a.c) - m) / m);
        }
    }
    Ok(vec![
        InvariantReport::new("solver.monotone_descent", fits, ascent.max(0.0), 0.0),
        InvariantReport::new("solver.sparsity_bound", fits, excess.max(0.0), 0.0),
        InvariantReport::new("solver.l1_extremality", fits, off_axis, 1e-10),
    ])
}

fn network_export(trials: usize, seed: u64) -> Result<InvariantReport> {
    let mut rng = suite_rng(seed, 12);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let dx = rng.random_range(1..=3);
        let act = ALL_ACTIVATIONS[rng.random_range(0..4)];
        let phi = FeatureMap::neural(act, dx, rng.random_range(0.5..2.0), BETAS[rng.random_range(0..3)])?;
        let d = rng.random_range(1..=3);
        let atoms = rng.random_range(0..=6);
        let mu = random_measure(&mut rng, atoms, phi.weight_dim(), d, Norm::L2, phi.radius());
        let net = export_network(&mu, &phi)?;
        let x = random_in_ball(&mut rng, dx, 2.0);
        let want = mu.integrate(&phi, &x)?;
        let scale: f64 = mu.atoms().iter().map(|a| phi.value(&x, &a.w).abs() * Norm::LInf.value(&a.c)).sum();
        worst = worst.max(rel_err_vec(&net.evaluate(&x)?, &want, scale));
    }
    Ok(InvariantReport::new("solver.network_export", trials, worst, IDENTITY_TOL))
}

fn hyper_suites(trials: usize, seed: u64) -> Result<Vec<InvariantReport>> {
    let mut rng = suite_rng(seed, 13);
    let (mut paths, mut domination, mut deeponet, mut factor) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..trials {
        let m = random_hyper_model(&mut rng);
        let z = random_in_ball(&mut rng, m.phi().input_dim(), 2.0);
        let x = random_in_ball(&mut rng, m.psi().input_dim(), 2.0);
        let a = hyper_evaluate(&m, &z, &x)?;
        let b = hyper_evaluate_function_form(&m, &z, &x)?;
        paths = paths.max(rel_err_vec(&a, &b, hyper_term_scale(&m, &z, &x)));
        domination = domination.max(function_form_tv_upper(&m) - weight_form_tv(&m));

        let (basis, coeffs, phi) = random_deeponet(&mut rng);
        let embedded = deeponet_embed(&basis, &coeffs, &phi)?;
        let zd = random_in_ball(&mut rng, phi.input_dim(), 2.0);
        let xd = random_in_ball(&mut rng, basis[0].feature().input_dim(), 2.0);
        let direct = deeponet_evaluate(&basis, &coeffs, &phi, &zd, &xd)?;
        let via = hyper_evaluate(&embedded, &zd, &xd)?;
        deeponet = deeponet.max(rel_err_vec(&via, &direct, hyper_term_scale(&embedded, &zd, &xd)));

        let psi = m.psi();
        let d = m.spec().dim;
        let nu = random_measure(&mut rng, 4, psi.weight_dim(), d, m.spec().primal_norm, psi.radius());
        let vd = random_vec(&mut rng, d);
        let (l, r) = measurement_factorization(&nu, psi, &vd, &x)?;
        let scale: f64 = nu.atoms().iter().map(|at| (psi.value(&x, &at.w) * dot(&at.c, &vd)).abs()).sum();
        factor = factor.max(rel_err(l, r, scale));
    }
    Ok(vec![
        InvariantReport::new("operator_learning.two_path_evaluation", trials, paths, IDENTITY_TOL),
        InvariantReport::new("operator_learning.norm_domination", trials, domination.max(0.0), IDENTITY_TOL),
        InvariantReport::new("operator_learning.deeponet_consistency", trials, deeponet, IDENTITY_TOL),
        InvariantReport::new("operator_learning.measurement_factorization", trials, factor, IDENTITY_TOL),
    ])
}

/// Run every suite. Faults only affect the reproducing suite.
pub fn run_all(opts: &VerifyOptions) -> Result<Vec<InvariantReport>> {
    let t = opts.trials.max(1);
    let s = opts.seed;
    let mut out = vec![
        pairing_bound(t, s),
        witness_attains(t, s),
        twin_norm(t, s),
        coalesce_preserves_action(t, s),
        tv_subadditive(t, s),
        integration_linear(t, s),
        gradient_check(t, s),
        reproducing(t, s, opts.inject_fault)?,
        b_norm_bracket(t, s)?,
        rkhs_interpolation(t.div_ceil(10), s)?,
        network_export(t, s)?,
    ];
    out.extend(solver_suites(t, s)?);
    out.extend(hyper_suites(t, s)?);
    Ok(out)
}
