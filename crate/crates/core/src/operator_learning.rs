//! Two-level hypernetwork models `f(z)(x) = Σ_m a_m φ(z, w_m) ψ(x, θ_m) v_m`.
//!
//! An outer feature `φ` over `Z × Ω` weighs base functions built from an
//! inner feature `ψ` over `X × Θ`. A model is evaluated and normed either in
//! weight form (a measure over `Ω` whose payloads are measures over `Θ`) or
//! in function form (a measure over `Ω` whose payloads are base-space
//! functions). The module also provides the joint representer solver and
//! the DeepONet embedding `Σ_n a_n(z) ζ_n(x)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual_pair::DualPairSpec;
use crate::error::{check_dim, Error, Result};
use crate::feature::FeatureMap;
use crate::measure::{Atom, AtomicVectorMeasure, MERGE_TOL};
use crate::numeric::{dot, linf_dist, KahanSum};
use crate::rkbs::{RkbsFunction, Side};
use crate::solver::dictionary::{AtomDictionary, AtomDomain, BallBlock};
use crate::solver::{GridOracleResult, Loss, SolverOptions};

/// Contributes `a φ(z, w) ψ(x, θ) v` to `f(z)(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperAtom {
    pub a: f64,
    pub w: Vec<f64>,
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperModel {
    atoms: Vec<HyperAtom>,
    phi: FeatureMap,
    psi: FeatureMap,
    spec: DualPairSpec,
}

#[derive(Serialize)]
struct HyperModelRef<'a> {
    atoms: &'a [HyperAtom],
    phi: &'a FeatureMap,
    psi: &'a FeatureMap,
}

#[derive(Deserialize)]
struct HyperModelOwned {
    atoms: Vec<HyperAtom>,
    phi: FeatureMap,
    psi: FeatureMap,
}

impl Serialize for HyperModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HyperModelRef {
            atoms: &self.atoms,
            phi: &self.phi,
            psi: &self.psi,
        }
        .serialize(s)
    }
}

impl HyperModel {
    pub fn new(atoms: Vec<HyperAtom>, phi: FeatureMap, psi: FeatureMap, spec: DualPairSpec) -> Result<Self> {
        let r2 = |r: f64| r * r * (1.0 + 1e-12);
        for h in &atoms {
            check_dim("hyper atom w", phi.weight_dim(), h.w.len())?;
            check_dim("hyper atom theta", psi.weight_dim(), h.theta.len())?;
            check_dim("hyper atom payload", spec.dim, h.v.len())?;
            let finite = std::iter::once(&h.a).chain(&h.w).chain(&h.theta).chain(&h.v).all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidArgument("hyper atom has non-finite entries".into()));
            }
            if dot(&h.w, &h.w) > r2(phi.radius()) || dot(&h.theta, &h.theta) > r2(psi.radius()) {
                return Err(Error::InvalidArgument("hyper atom lies outside its weight ball".into()));
            }
        }
        Ok(Self { atoms, phi, psi, spec })
    }

    /// Parse the JSON produced by `serde_json::to_string(&model)`; the
    /// payload space is not part of the file and is supplied here.
    pub fn from_json(json: &str, spec: DualPairSpec) -> Result<Self> {
        let m: HyperModelOwned =
            serde_json::from_str(json).map_err(|e| Error::InvalidArgument(format!("hyper model JSON: {e}")))?;
        Self::new(m.atoms, m.phi, m.psi, spec)
    }

    pub fn atoms(&self) -> &[HyperAtom] {
        &self.atoms
    }

    pub fn phi(&self) -> &FeatureMap {
        &self.phi
    }

    pub fn psi(&self) -> &FeatureMap {
        &self.psi
    }

    pub fn spec(&self) -> &DualPairSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The outer locations (merged at [`MERGE_TOL`]) with their inner
    /// measures `Σ a_m δ_{θ_m} v_m` over `Θ`.
    pub fn inner_measures(&self) -> Vec<(Vec<f64>, AtomicVectorMeasure)> {
        let mut groups: Vec<(Vec<f64>, Vec<Atom>)> = Vec::new();
        for h in &self.atoms {
            let atom = Atom::new(h.theta.clone(), h.v.iter().map(|v| h.a * v).collect());
            match groups.iter_mut().find(|(w, _)| linf_dist(w, &h.w) <= MERGE_TOL) {
                Some((_, list)) => list.push(atom),
                None => groups.push((h.w.clone(), vec![atom])),
            }
        }
        groups
            .into_iter()
            .map(|(w, list)| {
                let mu = AtomicVectorMeasure::from_atoms(list, self.spec.dim, self.spec.primal_norm, self.psi.radius())
                    .expect("validated hyper atoms");
                (w, mu)
            })
            .collect()
    }

    fn check_point(&self, z: &[f64], x: &[f64]) -> Result<()> {
        check_dim("hyper input z", self.phi.input_dim(), z.len())?;
        check_dim("base input x", self.psi.input_dim(), x.len())
    }
}

/// `f(z)(x)` in weight form: the inner measure `ν_z = Σ a_m φ(z, w_m) δ_{θ_m} v_m`
/// is formed first and then integrated against `ψ(x, ·)`.
pub fn hyper_evaluate(m: &HyperModel, z: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    m.check_point(z, x)?;
    let mut nu = AtomicVectorMeasure::zero(m.spec.dim, m.spec.primal_norm, m.psi.radius());
    for h in &m.atoms {
        let s = h.a * m.phi.value(z, &h.w);
        nu.push(Atom::new(h.theta.clone(), h.v.iter().map(|v| s * v).collect()))?;
    }
    nu.integrate(&m.psi, x)
}

/// `f(z)(x)` in function form: base functions `g_w = A_{Θ→X}(inner measure)`
/// are built per outer location and combined as `Σ_w φ(z, w) g_w(x)`.
pub fn hyper_evaluate_function_form(m: &HyperModel, z: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    m.check_point(z, x)?;
    let mut out = vec![0.0; m.spec.dim];
    for (w, inner) in m.inner_measures() {
        let g = RkbsFunction::primal(inner, m.psi.clone(), m.spec)?;
        let s = m.phi.value(z, &w);
        for (o, gv) in out.iter_mut().zip(g.evaluate(x)?) {
            *o += s * gv;
        }
    }
    Ok(out)
}

/// `Σ_m |a_m φ(z, w_m) ψ(x, θ_m)| ‖v_m‖_∞`, the natural scale for relative
/// comparisons of the two evaluation paths.
pub fn hyper_term_scale(m: &HyperModel, z: &[f64], x: &[f64]) -> f64 {
    m.atoms
        .iter()
        .map(|h| {
            (h.a * m.phi.value(z, &h.w) * m.psi.value(x, &h.theta)).abs()
                * h.v.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
        })
        .sum()
}

/// `Σ_w |inner measure|_V(Θ)` with the inner measures coalesced over `θ`.
pub fn weight_form_tv(m: &HyperModel) -> f64 {
    let s: KahanSum = m.inner_measures().iter().map(|(_, mu)| mu.total_variation()).collect();
    s.value()
}

/// `Σ_w ‖g_w‖_B` with each base-space norm replaced by its representative
/// upper bound.
pub fn function_form_tv_upper(m: &HyperModel) -> f64 {
    let s: KahanSum = m
        .inner_measures()
        .into_iter()
        .map(|(_, mu)| {
            RkbsFunction::primal(mu, m.psi.clone(), m.spec)
                .expect("inner measures match the base space")
                .b_norm_upper()
        })
        .collect();
    s.value()
}

/// The two sides of `M_j(A ν) = ⟨ν, ψ(x_j, ·) v⋄_j⟩` for a measurement
/// `M_j f = ⟨v⋄_j, f(x_j)⟩`: the base evaluation first, then atom-wise.
pub fn measurement_factorization(
    nu: &AtomicVectorMeasure,
    psi: &FeatureMap,
    v_dual: &[f64],
    x: &[f64],
) -> Result<(f64, f64)> {
    check_dim("measurement functional", nu.dim(), v_dual.len())?;
    let via_base = dot(v_dual, &nu.integrate(psi, x)?);
    let atomwise = nu.atoms().iter().map(|a| psi.value(x, &a.w) * dot(&a.c, v_dual)).sum();
    Ok((via_base, atomwise))
}

/// A base-space measurement `M_j f = ⟨v⋄_j, f(x_j)⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseFunctional {
    pub v_dual: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperProblem {
    /// `(z_n, y_n)` with `y_n ∈ ℝ^{d_meas}`, one entry per functional.
    pub data: Vec<(Vec<f64>, Vec<f64>)>,
    pub functionals: Vec<BaseFunctional>,
    pub phi: FeatureMap,
    pub psi: FeatureMap,
    pub spec: DualPairSpec,
    pub loss: Loss,
    pub lambda: f64,
    /// When set, `(w, θ)` is restricted to the product of the two tensor
    /// grids with this many points per axis.
    pub grid_per_dim: Option<usize>,
}

impl HyperProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        data: Vec<(Vec<f64>, Vec<f64>)>,
        functionals: Vec<BaseFunctional>,
        phi: FeatureMap,
        psi: FeatureMap,
        spec: DualPairSpec,
        loss: Loss,
        lambda: f64,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("the dataset is empty".into()));
        }
        if functionals.is_empty() {
            return Err(Error::InvalidArgument("at least one base functional is required".into()));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        loss.validate()?;
        for f in &functionals {
            check_dim("functional v_dual", spec.dim, f.v_dual.len())?;
            check_dim("functional x", psi.input_dim(), f.x.len())?;
        }
        for (z, y) in &data {
            check_dim("sample z", phi.input_dim(), z.len())?;
            check_dim("sample target", functionals.len(), y.len())?;
            if z.iter().chain(y).any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("dataset contains non-finite values".into()));
            }
        }
        Ok(Self {
            data,
            functionals,
            phi,
            psi,
            spec,
            loss,
            lambda,
            grid_per_dim: None,
        })
    }

    pub fn restricted_to_grid(mut self, per_dim: usize) -> Self {
        self.grid_per_dim = Some(per_dim);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    /// Nodes `(w, θ)` of the product grid, concatenated.
    pub fn product_grid(&self, per_dim: usize) -> Vec<Vec<f64>> {
        let ws = self.phi.weight_grid(per_dim);
        let thetas = self.psi.weight_grid(per_dim);
        ws.iter()
            .flat_map(|w| thetas.iter().map(move |t| w.iter().chain(t).copied().collect()))
            .collect()
    }

    fn dictionary(&self) -> HyperDictionary<'_> {
        let domain = match self.grid_per_dim {
            Some(g) => AtomDomain::Grid(self.product_grid(g)),
            None => AtomDomain::Balls(vec![
                BallBlock {
                    dim: self.phi.weight_dim(),
                    radius: self.phi.radius(),
                },
                BallBlock {
                    dim: self.psi.weight_dim(),
                    radius: self.psi.radius(),
                },
            ]),
        };
        HyperDictionary { p: self, domain }
    }

    fn targets(&self) -> Vec<Vec<f64>> {
        self.data.iter().map(|(_, y)| y.clone()).collect()
    }
}

/// Lifted dictionary: `block_n[j, :] = φ(z_n, w) ψ(x_j, θ) v⋄_jᵀ`.
struct HyperDictionary<'a> {
    p: &'a HyperProblem,
    domain: AtomDomain,
}

impl HyperDictionary<'_> {
    fn split<'l>(&self, loc: &'l [f64]) -> (&'l [f64], &'l [f64]) {
        loc.split_at(self.p.phi.weight_dim())
    }
}

impl AtomDictionary for HyperDictionary<'_> {
    fn location_dim(&self) -> usize {
        self.p.phi.weight_dim() + self.p.psi.weight_dim()
    }

    fn payload_dim(&self) -> usize {
        self.p.spec.dim
    }

    fn meas_dim(&self) -> usize {
        self.p.functionals.len()
    }

    fn n_samples(&self) -> usize {
        self.p.data.len()
    }

    fn domain(&self) -> &AtomDomain {
        &self.domain
    }

    fn block(&self, n: usize, loc: &[f64]) -> DMatrix<f64> {
        let (w, theta) = self.split(loc);
        let outer = self.p.phi.value(&self.p.data[n].0, w);
        let fs = &self.p.functionals;
        DMatrix::from_fn(fs.len(), self.p.spec.dim, |j, k| {
            outer * self.p.psi.value(&fs[j].x, theta) * fs[j].v_dual[k]
        })
    }

    fn correlation(&self, eta: &[Vec<f64>], loc: &[f64]) -> Vec<f64> {
        let (w, theta) = self.split(loc);
        // s_j = Σ_n η_nj φ(z_n, w)
        let mut s = vec![0.0; self.meas_dim()];
        for ((z, _), e) in self.p.data.iter().zip(eta) {
            let ph = self.p.phi.value(z, w);
            if ph != 0.0 {
                s.iter_mut().zip(e).for_each(|(a, b)| *a += ph * b);
            }
        }
        let mut v = vec![0.0; self.p.spec.dim];
        for (f, sj) in self.p.functionals.iter().zip(&s) {
            let k = sj * self.p.psi.value(&f.x, theta);
            v.iter_mut().zip(&f.v_dual).for_each(|(a, b)| *a += k * b);
        }
        v
    }

    fn correlation_grad(&self, eta: &[Vec<f64>], loc: &[f64], u: &[f64]) -> Vec<f64> {
        let (w, theta) = self.split(loc);
        let fs = &self.p.functionals;
        let pu: Vec<f64> = fs.iter().map(|f| dot(&f.v_dual, u)).collect();
        let psi_vals: Vec<f64> = fs.iter().map(|f| self.p.psi.value(&f.x, theta)).collect();
        let mut gw = vec![0.0; w.len()];
        let mut s = vec![0.0; fs.len()];
        for ((z, _), e) in self.p.data.iter().zip(eta) {
            let coef: f64 = (0..fs.len()).map(|j| e[j] * psi_vals[j] * pu[j]).sum();
            if coef != 0.0 {
                gw.iter_mut().zip(self.p.phi.grad_w(z, w)).for_each(|(a, b)| *a += coef * b);
            }
            let ph = self.p.phi.value(z, w);
            s.iter_mut().zip(e).for_each(|(a, b)| *a += ph * b);
        }
        let mut gt = vec![0.0; theta.len()];
        for (j, f) in fs.iter().enumerate() {
            let coef = s[j] * pu[j];
            if coef != 0.0 {
                gt.iter_mut().zip(self.p.psi.grad_w(&f.x, theta)).for_each(|(a, b)| *a += coef * b);
            }
        }
        gw.extend(gt);
        gw
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperFitState {
    pub model: HyperModel,
    pub objective_history: Vec<f64>,
    pub certificate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
}

impl HyperFitState {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().expect("history is never empty")
    }
}

/// `(1/N) Σ_n L((⟨v⋄_j, f(z_n)(x_j)⟩)_j, y_n) + λ · weight_form_tv`.
pub fn hyper_objective(hp: &HyperProblem, m: &HyperModel) -> Result<f64> {
    check_dim("model payload", hp.spec.dim, m.spec.dim)?;
    let mut fit = KahanSum::new();
    for (z, y) in &hp.data {
        let pred = hp
            .functionals
            .iter()
            .map(|f| Ok(dot(&f.v_dual, &hyper_evaluate(m, z, &f.x)?)))
            .collect::<Result<Vec<f64>>>()?;
        fit.add(hp.loss.value(&pred, y));
    }
    Ok(fit.value() / hp.n() as f64 + hp.lambda * weight_form_tv(m))
}

/// Joint representer solver over `(w, θ, extreme payload)`.
pub fn hyper_fit(hp: &HyperProblem, opts: &SolverOptions) -> Result<HyperFitState> {
    let dict = hp.dictionary();
    let targets = hp.targets();
    let out = crate::solver::gcg_run(&dict, &targets, hp.loss, hp.lambda, hp.spec.primal_norm, opts)?;
    let dw = hp.phi.weight_dim();
    let atoms = out
        .atoms
        .into_iter()
        .map(|(loc, c)| {
            let a = hp.spec.primal_norm.value(&c);
            HyperAtom {
                a,
                w: loc[..dw].to_vec(),
                theta: loc[dw..].to_vec(),
                v: c.iter().map(|v| v / a).collect(),
            }
        })
        .collect();
    Ok(HyperFitState {
        model: HyperModel::new(atoms, hp.phi.clone(), hp.psi.clone(), hp.spec)?,
        objective_history: out.history,
        certificate: out.certificate,
        iterations: out.iterations,
        seed: opts.seed,
        converged: out.converged,
    })
}

/// Largest certificate at the zero model over the product grid.
pub fn hyper_lambda_max(hp: &HyperProblem, grid_per_dim: usize) -> Result<f64> {
    let dict = HyperDictionary {
        p: hp,
        domain: AtomDomain::Grid(hp.product_grid(hp.grid_per_dim.unwrap_or(grid_per_dim))),
    };
    let eta: Vec<Vec<f64>> = hp
        .data
        .iter()
        .map(|(_, y)| hp.loss.grad(&vec![0.0; y.len()], y).iter().map(|g| g / hp.n() as f64).collect())
        .collect();
    crate::solver::zero_certificate(&dict, &eta, hp.spec.primal_norm)
}

/// The discretized problem on the product grid, solved directly.
pub fn hyper_grid_oracle(hp: &HyperProblem, grid_per_dim: usize, max_iter: usize, tol: f64) -> Result<GridOracleResult> {
    let dict = hp.dictionary();
    crate::solver::solve_on_grid(
        &dict,
        hp.product_grid(grid_per_dim),
        &hp.targets(),
        hp.loss,
        hp.lambda,
        hp.spec.primal_norm,
        max_iter,
        tol,
    )
}

/// Branch coefficients `a_n(z) = Σ_k a_{nk} φ(z, w_{nk})` as `(a_{nk}, w_{nk})`.
pub type BranchCoefficients = Vec<(f64, Vec<f64>)>;

fn check_deeponet(basis: &[RkbsFunction], coeffs: &[BranchCoefficients]) -> Result<()> {
    check_dim("DeepONet coefficient lists", basis.len(), coeffs.len())?;
    if let Some(first) = basis.first() {
        for b in basis {
            if b.side() != Side::Primal {
                return Err(Error::Unsupported("DeepONet basis functions must be primal-side atomic functions".into()));
            }
            if b.feature() != first.feature() || b.spec() != first.spec() {
                return Err(Error::InvalidArgument("DeepONet basis functions must share feature and space".into()));
            }
        }
    }
    Ok(())
}

/// Expand `Σ_n (Σ_k a_{nk} δ_{w_{nk}}) ζ_n` into hyper atoms by
/// distributing each basis function's atoms.
pub fn deeponet_embed(basis: &[RkbsFunction], coeffs: &[BranchCoefficients], phi: &FeatureMap) -> Result<HyperModel> {
    check_deeponet(basis, coeffs)?;
    let Some(first) = basis.first() else {
        return Err(Error::InvalidArgument("DeepONet needs at least one basis function".into()));
    };
    let mut atoms = Vec::new();
    for (zeta, list) in basis.iter().zip(coeffs) {
        for (a, w) in list {
            if *a == 0.0 {
                continue;
            }
            for atom in zeta.measure().atoms() {
                atoms.push(HyperAtom {
                    a: *a,
                    w: w.clone(),
                    theta: atom.w.clone(),
                    v: atom.c.clone(),
                });
            }
        }
    }
    HyperModel::new(atoms, phi.clone(), first.feature().clone(), *first.spec())
}

/// The explicit DeepONet sum `Σ_n a_n(z) ζ_n(x)`.
pub fn deeponet_evaluate(
    basis: &[RkbsFunction],
    coeffs: &[BranchCoefficients],
    phi: &FeatureMap,
    z: &[f64],
    x: &[f64],
) -> Result<Vec<f64>> {
    check_deeponet(basis, coeffs)?;
    check_dim("hyper input z", phi.input_dim(), z.len())?;
    let dim = basis.first().map_or(0, |b| b.spec().dim);
    let mut out = vec![0.0; dim];
    for (zeta, list) in basis.iter().zip(coeffs) {
        let mut a_n = 0.0;
        for (a, w) in list {
            a_n += a * phi.eval_phi(z, w)?;
        }
        for (o, v) in out.iter_mut().zip(zeta.evaluate(x)?) {
            *o += a_n * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual_pair::Norm;
    use crate::feature::{Activation, Beta, FeatureKind};
    use crate::numeric::rel_err_vec;
    use crate::solver::PenaltyMode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn const_one(radius: f64) -> FeatureMap {
        // GaussianRbf at ω = 0, b = 0 is identically 1; with β ≡ 1 a
        // constant-one feature is realized at the origin of Ω.
        FeatureMap::neural(Activation::GaussianRbf, 1, radius, Beta::One).unwrap()
    }

    fn tanh(dx: usize, r: f64) -> FeatureMap {
        FeatureMap::neural(Activation::Tanh, dx, r, Beta::SmoothBump).unwrap()
    }

    fn in_ball(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
        crate::rkbs::random_in_ball(rng, n, r)
    }

    fn random_model(rng: &mut ChaCha8Rng, atoms: usize) -> HyperModel {
        let phi = tanh(2, 1.5);
        let psi = FeatureMap::neural(Activation::GaussianRbf, 1, 2.0, Beta::SmoothBump).unwrap();
        let spec = DualPairSpec::new(2, Norm::L2).unwrap();
        let ws: Vec<Vec<f64>> = (0..2).map(|_| in_ball(rng, 3, 1.5)).collect();
        let list = (0..atoms)
            .map(|_| HyperAtom {
                a: rng.random_range(-1.0..1.0),
                w: ws[rng.random_range(0..2)].clone(),
                theta: in_ball(rng, 2, 2.0),
                v: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            })
            .collect();
        HyperModel::new(list, phi, psi, spec).unwrap()
    }

    #[test]
    fn single_constant_atom_evaluates_to_a_v() {
        let phi = const_one(1.0);
        let spec = DualPairSpec::new(2, Norm::L1).unwrap();
        let m = HyperModel::new(
            vec![HyperAtom {
                a: 2.5,
                w: vec![0.0, 0.0],
                theta: vec![0.0, 0.0],
                v: vec![1.0, -2.0],
            }],
            phi.clone(),
            phi,
            spec,
        )
        .unwrap();
        assert_eq!(hyper_evaluate(&m, &[0.3], &[-0.7]).unwrap(), vec![2.5, -5.0]);
        assert_eq!(hyper_evaluate_function_form(&m, &[0.3], &[-0.7]).unwrap(), vec![2.5, -5.0]);
        assert_eq!(weight_form_tv(&m), 7.5);
        assert_eq!(function_form_tv_upper(&m), 7.5);
    }

    #[test]
    fn truncated_outer_feature_gives_zero() {
        // β vanishes on the boundary of Ω.
        let phi = tanh(1, 1.0);
        let psi = const_one(1.0);
        let spec = DualPairSpec::new(1, Norm::L1).unwrap();
        let m = HyperModel::new(
            vec![HyperAtom {
                a: 1.0,
                w: vec![1.0, 0.0],
                theta: vec![0.0, 0.0],
                v: vec![1.0],
            }],
            phi,
            psi,
            spec,
        )
        .unwrap();
        assert_eq!(hyper_evaluate(&m, &[0.8], &[0.1]).unwrap(), vec![0.0]);
    }

    #[test]
    fn opposite_payloads_cancel_and_annihilate_norms() {
        let spec = DualPairSpec::new(2, Norm::L2).unwrap();
        let atom = |v: Vec<f64>| HyperAtom {
            a: 1.0,
            w: vec![0.1, 0.2],
            theta: vec![-0.3, 0.4],
            v,
        };
        let m = HyperModel::new(vec![atom(vec![1.0, 2.0]), atom(vec![-1.0, -2.0])], tanh(1, 1.0), tanh(1, 1.0), spec).unwrap();
        assert_eq!(hyper_evaluate(&m, &[0.5], &[0.2]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(weight_form_tv(&m), 0.0);
        assert_eq!(function_form_tv_upper(&m), 0.0);
    }

    #[test]
    fn duplicate_base_functions_make_function_form_strictly_smaller() {
        // GaussianRbf is even, so ψ(·, θ) = ψ(·, −θ).
        let psi = FeatureMap::neural(Activation::GaussianRbf, 1, 1.0, Beta::One).unwrap();
        let spec = DualPairSpec::new(1, Norm::L1).unwrap();
        let theta = vec![0.4, -0.2];
        let m = HyperModel::new(
            vec![
                HyperAtom {
                    a: 1.0,
                    w: vec![0.0, 0.0],
                    theta: theta.clone(),
                    v: vec![1.0],
                },
                HyperAtom {
                    a: 1.0,
                    w: vec![0.0, 0.0],
                    theta: theta.iter().map(|t| -t).collect(),
                    v: vec![-0.5],
                },
            ],
            tanh(1, 1.0),
            psi,
            spec,
        )
        .unwrap();
        // Weight form: |1| + |−0.5| = 1.5; function form: |1 − 0.5| = 0.5.
        assert_eq!(weight_form_tv(&m), 1.5);
        assert_eq!(function_form_tv_upper(&m), 0.5);
    }

    #[test]
    fn two_paths_agree_and_norms_are_ordered_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = random_model(&mut rng, 6);
            let z = in_ball(&mut rng, 2, 1.0);
            let x = in_ball(&mut rng, 1, 1.0);
            let a = hyper_evaluate(&m, &z, &x).unwrap();
            let b = hyper_evaluate_function_form(&m, &z, &x).unwrap();
            assert!(rel_err_vec(&a, &b, hyper_term_scale(&m, &z, &x)) <= 1e-12);
            assert!(function_form_tv_upper(&m) <= weight_form_tv(&m) + 1e-12);
        }
    }

    #[test]
    fn measurement_factorizes_through_base_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = tanh(2, 1.0);
        let nu = crate::rkbs::random_measure(&mut rng, 5, 3, 2, Norm::L2, 1.0);
        let (l, r) = measurement_factorization(&nu, &psi, &[0.3, -1.2], &[0.5, 0.1]).unwrap();
        assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
    }

    #[test]
    fn json_shape_and_round_trip() {
        let spec = DualPairSpec::new(1, Norm::L1).unwrap();
        let m = HyperModel::new(
            vec![HyperAtom {
                a: 0.5,
                w: vec![0.0, 0.25],
                theta: vec![0.5, 0.0],
                v: vec![2.0],
            }],
            tanh(1, 1.0),
            tanh(1, 1.0),
            spec,
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with(r#"{"atoms":[{"a":0.5,"w":[0.0,0.25],"theta":[0.5,0.0],"v":[2.0]}],"phi":{"kind":"neural""#));
        assert_eq!(HyperModel::from_json(&s, spec).unwrap(), m);
    }

    #[test]
    fn deeponet_examples() {
        let spec = DualPairSpec::new(2, Norm::L2).unwrap();
        let psi = tanh(1, 1.0);
        let phi = tanh(2, 1.5);
        let zeta = RkbsFunction::primal(
            AtomicVectorMeasure::dirac(vec![0.3, -0.1], vec![1.0, 2.0], Norm::L2, 1.0).unwrap(),
            psi.clone(),
            spec,
        )
        .unwrap();
        let single = deeponet_embed(std::slice::from_ref(&zeta), &[vec![(0.7, vec![0.1, 0.2, 0.3])]], &phi).unwrap();
        assert_eq!(single.len(), 1);
        let zero = deeponet_embed(std::slice::from_ref(&zeta), &[vec![(0.0, vec![0.1, 0.2, 0.3])]], &phi).unwrap();
        assert!(zero.is_empty());
        let dual = RkbsFunction::dual(
            AtomicVectorMeasure::dirac(vec![0.3], vec![1.0, 2.0], Norm::L2, 1.0).unwrap(),
            psi,
            spec,
        )
        .unwrap();
        assert!(matches!(
            deeponet_embed(&[dual], &[vec![(1.0, vec![0.0, 0.0, 0.0])]], &phi),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn deeponet_embedding_matches_explicit_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = DualPairSpec::new(2, Norm::L1).unwrap();
        let psi = tanh(1, 1.0);
        let phi = tanh(2, 1.5);
        let basis: Vec<RkbsFunction> = (0..2)
            .map(|_| RkbsFunction::primal(crate::rkbs::random_measure(&mut rng, 3, 2, 2, Norm::L1, 1.0), psi.clone(), spec).unwrap())
            .collect();
        let coeffs: Vec<BranchCoefficients> = (0..2)
            .map(|_| (0..3).map(|_| (rng.random_range(-1.0..1.0), in_ball(&mut rng, 3, 1.5))).collect())
            .collect();
        let m = deeponet_embed(&basis, &coeffs, &phi).unwrap();
        for _ in 0..50 {
            let z = in_ball(&mut rng, 2, 1.0);
            let x = in_ball(&mut rng, 1, 1.0);
            let direct = deeponet_evaluate(&basis, &coeffs, &phi, &z, &x).unwrap();
            let via = hyper_evaluate(&m, &z, &x).unwrap();
            assert!(rel_err_vec(&via, &direct, hyper_term_scale(&m, &z, &x)) <= 1e-12);
        }
    }

    fn toy_problem(seed: u64, lambda: f64) -> HyperProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = FeatureMap::neural(Activation::Tanh, 1, 1.0, Beta::One).unwrap();
        let psi = FeatureMap::neural(Activation::Tanh, 1, 1.0, Beta::One).unwrap();
        let spec = DualPairSpec::new(2, Norm::L2).unwrap();
        let functionals = (0..2)
            .map(|_| BaseFunctional {
                v_dual: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                x: vec![rng.random_range(-1.0..1.0)],
            })
            .collect();
        let data = (0..3)
            .map(|_| (vec![rng.random_range(-1.0..1.0)], vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]))
            .collect();
        HyperProblem::new(data, functionals, phi, psi, spec, Loss::SquaredHalf, lambda).unwrap()
    }

    #[test]
    fn hyper_fit_empty_above_lambda_max() {
        let hp = toy_problem(1, 1.0).restricted_to_grid(5);
        let lmax = hyper_lambda_max(&hp, 5).unwrap();
        let st = hyper_fit(&hp.clone().with_lambda(lmax), &SolverOptions::default()).unwrap();
        assert!(st.model.is_empty());
        let st = hyper_fit(&hp.with_lambda(0.5 * lmax), &SolverOptions::default()).unwrap();
        assert!(!st.model.is_empty());
    }

    #[test]
    fn hyper_fit_matches_product_grid_oracle() {
        for mode in [PenaltyMode::L1, PenaltyMode::Group] {
            let hp = toy_problem(2, 0.01).restricted_to_grid(5);
            let opts = SolverOptions {
                mode,
                ..Default::default()
            };
            let st = hyper_fit(&hp, &opts).unwrap();
            assert!(st.converged);
            assert!(st.model.len() <= hp.n() * hp.functionals.len());
            let obj = hyper_objective(&hp, &st.model).unwrap();
            assert!((obj - st.objective()).abs() <= 1e-10 * obj);
            let oracle = hyper_grid_oracle(&hp, 5, 200_000, 1e-12).unwrap();
            assert!((obj - oracle.objective).abs() / oracle.objective <= 1e-4, "{mode:?}: {obj} vs {}", oracle.objective);
            for w in st.objective_history.windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
    }

    #[test]
    fn hyper_fit_continuous_converges_sparsely() {
        let hp = toy_problem(4, 0.01);
        let st = hyper_fit(&hp, &SolverOptions::default()).unwrap();
        assert!(st.converged, "certificate {}", st.certificate);
        assert!(st.model.len() <= hp.n() * hp.functionals.len());
    }

    #[test]
    fn single_pair_with_constant_features_is_soft_threshold() {
        // φ = ψ = 1 (GaussianRbf on a β ≡ 1 ball at the origin achieves the
        // sup 1); one functional v⋄ = 1 on ℝ¹: min ½(p − y)² + λ|p|.
        let phi = FeatureMap::new(FeatureKind::Gaussian { bandwidth: 1.0 }, 1, 1.0, Beta::One).unwrap();
        let psi = phi.clone();
        let spec = DualPairSpec::new(1, Norm::L1).unwrap();
        let hp = HyperProblem::new(
            vec![(vec![0.0], vec![1.0])],
            vec![BaseFunctional {
                v_dual: vec![1.0],
                x: vec![0.0],
            }],
            phi,
            psi,
            spec,
            Loss::SquaredHalf,
            0.2,
        )
        .unwrap();
        let st = hyper_fit(&hp, &SolverOptions::default()).unwrap();
        let p = hyper_evaluate(&st.model, &[0.0], &[0.0]).unwrap()[0];
        assert!((p - 0.8).abs() < 1e-5, "{p}");
        assert!((st.objective() - (0.5 * 0.04 + 0.2 * 0.8)).abs() < 1e-8);
    }
}
