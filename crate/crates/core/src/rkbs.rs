//! Space-level operations on integral vv-RKBS functions and the vv-RKHS
//! kernel-ridge baseline.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dual_pair::DualPairSpec;
use crate::error::{check_dim, Error, Result};
use crate::feature::FeatureMap;
use crate::measure::{product_pairing, product_pairing_scale, Atom, AtomicVectorMeasure, MERGE_TOL, PRUNE_TOL};
use crate::numeric::{dot, rel_err};

/// Which side of the adjoint pair a function lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `f = A_{Ω→X} μ`, evaluated at inputs `x`.
    Primal,
    /// `g = A_{X→Ω} ρ`, evaluated at weights `w`.
    Dual,
}

/// A function of the integral vv-RKBS pair represented by an atomic measure.
#[derive(Debug, Clone, PartialEq)]
pub struct RkbsFunction {
    measure: AtomicVectorMeasure,
    feature: FeatureMap,
    spec: DualPairSpec,
    side: Side,
}

impl RkbsFunction {
    /// `f = A_{Ω→X} μ`; payloads measured in the primal norm.
    pub fn primal(measure: AtomicVectorMeasure, feature: FeatureMap, spec: DualPairSpec) -> Result<Self> {
        Self::build(measure, feature, spec, Side::Primal)
    }

    /// `g = A_{X→Ω} ρ`; payloads measured in the dual norm.
    pub fn dual(measure: AtomicVectorMeasure, feature: FeatureMap, spec: DualPairSpec) -> Result<Self> {
        Self::build(measure, feature, spec, Side::Dual)
    }

    fn build(measure: AtomicVectorMeasure, feature: FeatureMap, spec: DualPairSpec, side: Side) -> Result<Self> {
        let measure = measure.with_dim(spec.dim)?;
        let (expected_loc, expected_norm) = match side {
            Side::Primal => (feature.weight_dim(), spec.primal_norm),
            Side::Dual => (feature.input_dim(), spec.dual_norm()),
        };
        if let Some(loc) = measure.location_dim() {
            check_dim("rkbs function atom location", expected_loc, loc)?;
        }
        if measure.norm() != expected_norm {
            return Err(Error::InvalidArgument(format!(
                "measure payload norm {} does not match the {:?} side norm {}",
                measure.norm().name(),
                side,
                expected_norm.name()
            )));
        }
        Ok(Self {
            measure,
            feature,
            spec,
            side,
        })
    }

    pub fn measure(&self) -> &AtomicVectorMeasure {
        &self.measure
    }

    pub fn feature(&self) -> &FeatureMap {
        &self.feature
    }

    pub fn spec(&self) -> &DualPairSpec {
        &self.spec
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        match self.side {
            Side::Primal => self.measure.integrate(&self.feature, point),
            Side::Dual => self.measure.integrate_adjoint(&self.feature, point),
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            measure: self.measure.scale(alpha),
            ..self.clone()
        }
    }

    /// A representing measure with no redundant atoms: locations coalesced,
    /// atoms with identically vanishing features dropped, and atoms whose
    /// features are exact multiples of another atom's merged into it.
    pub fn reduced_representative(&self) -> AtomicVectorMeasure {
        let coalesced = self.measure.coalesce(MERGE_TOL);
        if self.side == Side::Dual {
            return coalesced;
        }
        let mut kept: Vec<Atom> = Vec::new();
        'atoms: for a in coalesced.into_atoms() {
            if self.feature.vanishes_identically(&a.w) {
                continue;
            }
            for k in kept.iter_mut() {
                if let Some(s) = self.feature.equivalent_scale(&k.w, &a.w) {
                    // φ(·, a.w) = s φ(·, k.w): keep the location with the
                    // larger feature so the merged mass never exceeds the sum.
                    if s.abs() <= 1.0 {
                        for (kc, ac) in k.c.iter_mut().zip(&a.c) {
                            *kc += s * ac;
                        }
                    } else {
                        for (kc, ac) in k.c.iter_mut().zip(&a.c) {
                            *kc = *kc / s + ac;
                        }
                        k.w = a.w.clone();
                    }
                    continue 'atoms;
                }
            }
            kept.push(a);
        }
        let norm = self.measure.norm();
        kept.retain(|a| norm.value(&a.c) >= PRUNE_TOL);
        AtomicVectorMeasure::from_atoms(kept, self.spec.dim, norm, self.measure.radius())
            .expect("reduced atoms come from a valid measure")
    }

    /// Upper estimate of `‖f‖_B`: total variation of the reduced
    /// representing measure.
    pub fn b_norm_upper(&self) -> f64 {
        self.reduced_representative().total_variation()
    }

    /// Lower estimate of `‖f‖_B` from single-atom dual certificates
    /// `g = φ(x, ·) u⋄` at the probe inputs, with `u⋄` the dual witness of
    /// `f(x)` and `‖g‖_{B⋄}` bounded above analytically.
    pub fn b_norm_lower(&self, probe_xs: &[Vec<f64>]) -> Result<f64> {
        if probe_xs.is_empty() {
            return Err(Error::InvalidArgument("b_norm_lower needs at least one probe point".into()));
        }
        if self.side == Side::Dual {
            return Err(Error::Unsupported("b_norm_lower is defined for primal-side functions".into()));
        }
        let mut best = 0.0_f64;
        for x in probe_xs {
            let fx = self.evaluate(x)?;
            let sup = self.feature.sup_abs_bound(x);
            if sup > 0.0 {
                let witness = self.spec.dual_witness(&fx)?;
                best = best.max(self.spec.pair(&witness, &fx)? / sup);
            }
        }
        Ok(best)
    }

    /// `[lower, upper]` bracket on `‖f‖_B`.
    pub fn b_norm_interval(&self, probe_xs: &[Vec<f64>]) -> Result<(f64, f64)> {
        Ok((self.b_norm_lower(probe_xs)?, self.b_norm_upper()))
    }
}

/// Outcome of [`verify_reproducing`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReproducingReport {
    pub trials: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Tolerance of the reproducing-property checks.
pub const REPRODUCING_TOL: f64 = 1e-10;

/// Check both reproducing identities and the three-way pairing equality on
/// `trials` random draws.
pub fn verify_reproducing(f: &RkbsFunction, trials: usize, seed: u64) -> Result<ReproducingReport> {
    verify_reproducing_with_fault(f, trials, seed, 0.0)
}

/// [`verify_reproducing`] with `fault` added to every kernel-side pairing;
/// used as a negative control.
pub fn verify_reproducing_with_fault(
    f: &RkbsFunction,
    trials: usize,
    seed: u64,
    fault: f64,
) -> Result<ReproducingReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = &f.feature;
    let spec = &f.spec;
    let d = spec.dim;
    let dx = phi.input_dim();
    let dw = phi.weight_dim();
    let x_radius = 2.0;
    let w_radius = phi.radius();
    let mut worst = 0.0_f64;

    for _ in 0..trials {
        let x = random_in_ball(&mut rng, dx, x_radius);
        let w = random_in_ball(&mut rng, dw, w_radius);
        let u_dual = random_vec(&mut rng, d);
        let u = random_vec(&mut rng, d);
        let companion_len = rng.random_range(1..=4);

        // measure on Ω and measure on X for this trial
        let (mu, rho) = match f.side {
            Side::Primal => {
                let rho = random_measure(&mut rng, companion_len, dx, d, spec.dual_norm(), x_radius);
                (f.measure.clone(), rho)
            }
            Side::Dual => {
                let mu = random_measure(&mut rng, companion_len, dw, d, spec.primal_norm, w_radius);
                (mu, f.measure.clone())
            }
        };

        // B side: ⟨u⋄, f(x)⟩ = ⟨δ_x u⋄, μ⟩
        let fx = mu.integrate(phi, &x)?;
        let lhs = spec.pair(&u_dual, &fx)?;
        let delta_x = AtomicVectorMeasure::dirac(x.clone(), u_dual.clone(), spec.dual_norm(), x_radius)?;
        let rhs = product_pairing(&delta_x, &mu, phi)? + fault;
        worst = worst.max(rel_err(lhs, rhs, product_pairing_scale(&delta_x, &mu, phi)));

        // B⋄ side: ⟨g(w), u⟩ = ⟨ρ, δ_w u⟩
        let gw = rho.integrate_adjoint(phi, &w)?;
        let lhs = spec.pair(&gw, &u)?;
        let delta_w = AtomicVectorMeasure::dirac(w.clone(), u.clone(), spec.primal_norm, w_radius)?;
        let rhs = product_pairing(&rho, &delta_w, phi)? + fault;
        worst = worst.max(rel_err(lhs, rhs, product_pairing_scale(&rho, &delta_w, phi)));

        // three-way equality
        let (via_g, via_f, double) = three_way_pairing(&rho, &mu, phi)?;
        let scale = product_pairing_scale(&rho, &mu, phi);
        worst = worst.max(rel_err(via_g, double + fault, scale));
        worst = worst.max(rel_err(via_f, double + fault, scale));
    }
    Ok(ReproducingReport {
        trials,
        max_rel_error: worst,
        passed: worst <= REPRODUCING_TOL,
    })
}

/// `(Σ_j ⟨g(w_j), c_j⟩, Σ_i ⟨c⋄_i, f(x_i)⟩, double sum)`.
pub fn three_way_pairing(
    rho: &AtomicVectorMeasure,
    mu: &AtomicVectorMeasure,
    phi: &FeatureMap,
) -> Result<(f64, f64, f64)> {
    let mut via_g = 0.0;
    for a in mu.atoms() {
        via_g += dot(&rho.integrate_adjoint(phi, &a.w)?, &a.c);
    }
    let mut via_f = 0.0;
    for a in rho.atoms() {
        via_f += dot(&a.c, &mu.integrate(phi, &a.w)?);
    }
    Ok((via_g, via_f, product_pairing(rho, mu, phi)?))
}

/// Standard normal sample in `ℝ^n`.
pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform sample in the Euclidean ball of radius `r`.
pub fn random_in_ball<R: Rng>(rng: &mut R, n: usize, r: f64) -> Vec<f64> {
    let g = random_vec(rng, n);
    let len = dot(&g, &g).sqrt();
    if len == 0.0 {
        return vec![0.0; n];
    }
    let radial = r * rng.random::<f64>().powf(1.0 / n as f64);
    g.iter().map(|v| v * radial / len).collect()
}

/// `atoms` atoms at uniform locations in the radius-`radius` ball with
/// standard normal payloads.
pub fn random_measure<R: Rng>(
    rng: &mut R,
    atoms: usize,
    loc_dim: usize,
    dim: usize,
    norm: crate::Norm,
    radius: f64,
) -> AtomicVectorMeasure {
    let list = (0..atoms)
        .map(|_| Atom::new(random_in_ball(rng, loc_dim, radius), random_vec(rng, dim)))
        .collect();
    AtomicVectorMeasure::from_atoms(list, dim, norm, radius).expect("sampled atoms lie in the ball")
}

/// Scalar kernels for the vv-RKHS baseline `K(x, y) = K_s(x, y) Id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarKernel {
    GaussianRbf { bandwidth: f64 },
    /// Explicit Gram values on a finite input set.
    Tabulated { points: Vec<Vec<f64>>, values: Vec<Vec<f64>> },
}

impl ScalarKernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            ScalarKernel::GaussianRbf { bandwidth } => {
                check_dim("kernel arguments", x.len(), y.len())?;
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((-d2 / (2.0 * bandwidth * bandwidth)).exp())
            }
            ScalarKernel::Tabulated { points, values } => {
                let find = |p: &[f64]| {
                    points.iter().position(|q| q.as_slice() == p).ok_or_else(|| {
                        Error::InvalidArgument(format!("point {p:?} is not in the tabulated kernel's input set"))
                    })
                };
                let (i, j) = (find(x)?, find(y)?);
                values
                    .get(i)
                    .and_then(|r| r.get(j))
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument("tabulated kernel values are incomplete".into()))
            }
        }
    }
}

/// `prediction(x) = Σ_n K_s(x, x_n) u_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkhsModel {
    pub centers: Vec<Vec<f64>>,
    #[serde(rename = "coeffs")]
    pub coefficients: Vec<Vec<f64>>,
    pub kernel: ScalarKernel,
}

impl RkhsModel {
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.coefficients.first().map_or(0, Vec::len);
        let mut out = vec![0.0; d];
        for (c, u) in self.centers.iter().zip(&self.coefficients) {
            let k = self.kernel.eval(x, c)?;
            for (o, v) in out.iter_mut().zip(u) {
                *o += k * v;
            }
        }
        Ok(out)
    }

    /// `‖(G + NλI) C − Y‖_∞` on the training data.
    pub fn stationarity_residual(&self, data: &[(Vec<f64>, Vec<f64>)], lambda: f64) -> Result<f64> {
        let n = data.len();
        let gram = gram_matrix(&self.kernel, data)?;
        let c = DMatrix::from_fn(n, self.coefficients[0].len(), |i, j| self.coefficients[i][j]);
        let y = DMatrix::from_fn(n, c.ncols(), |i, j| data[i].1[j]);
        let sys = gram + DMatrix::identity(n, n) * (n as f64 * lambda);
        Ok((sys * c - y).amax())
    }
}

fn gram_matrix(kernel: &ScalarKernel, data: &[(Vec<f64>, Vec<f64>)]) -> Result<DMatrix<f64>> {
    let n = data.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = kernel.eval(&data[i].0, &data[j].0)?;
        }
    }
    Ok(g)
}

/// Jitter added to the Gram diagonal for the factorization when `λ = 0`.
pub const RKHS_JITTER: f64 = 1e-12;

/// Solve `(G + NλI) C = Y` for the canonical kernel `K_s · Id`.
pub fn rkhs_fit(data: &[(Vec<f64>, Vec<f64>)], kernel: ScalarKernel, lambda: f64) -> Result<RkhsModel> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("rkhs_fit needs at least one sample".into()));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
    }
    let n = data.len();
    let dx = data[0].0.len();
    let d = data[0].1.len();
    for (x, y) in data {
        check_dim("rkhs input", dx, x.len())?;
        check_dim("rkhs output", d, y.len())?;
    }
    if lambda == 0.0 {
        for i in 0..n {
            for j in 0..i {
                if data[i].0 == data[j].0 {
                    return Err(Error::Solver(format!(
                        "singular Gram system: duplicate inputs at rows {j} and {i} with lambda = 0"
                    )));
                }
            }
        }
    }
    let gram = gram_matrix(&kernel, data)?;
    let system = &gram + DMatrix::identity(n, n) * (n as f64 * lambda);
    let jitter = if lambda == 0.0 { RKHS_JITTER } else { 0.0 };
    let factor = (&system + DMatrix::identity(n, n) * jitter)
        .cholesky()
        .ok_or_else(|| Error::Solver("Gram system is not positive definite".into()))?;
    let y = DMatrix::from_fn(n, d, |i, j| data[i].1[j]);
    let mut c = factor.solve(&y);
    // refinement against the unjittered system
    for _ in 0..5 {
        let r = &y - &system * &c;
        if r.amax() <= 1e-13 * y.amax().max(1.0) {
            break;
        }
        c += factor.solve(&r);
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("Gram solve produced non-finite coefficients".into()));
    }
    Ok(RkhsModel {
        centers: data.iter().map(|(x, _)| x.clone()).collect(),
        coefficients: (0..n).map(|i| c.row(i).iter().copied().collect()).collect(),
        kernel,
    })
}
