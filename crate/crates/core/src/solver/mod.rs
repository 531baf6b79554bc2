//! The total-variation regularized learning problem
//!
//! ```text
//! min_μ  (1/N) Σ_n L(M (Aμ)(x_n), y_n) + λ |μ|(Ω)
//! ```
//!
//! solved by atom-inserting generalized conditional gradient, together with
//! a fully discretized grid oracle and the shallow-network export of the
//! solution.

pub mod dictionary;
mod gcg;
pub mod lmo;
mod network;
mod oracle;
pub mod prox;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use dictionary::{AtomDictionary, AtomDomain, BallBlock, FeatureDictionary};
pub use gcg::{PenaltyMode, SolverOptions};
pub use lmo::LmoResult;
pub use network::{export_network, NetworkDescription};
pub use oracle::{grid_oracle, GridOracleResult};
pub(crate) use gcg::run as gcg_run;
pub(crate) use oracle::solve_on_grid;

use crate::dual_pair::DualPairSpec;
use crate::error::{check_dim, Error, Result};
use crate::feature::FeatureMap;
use crate::measure::{Atom, AtomicVectorMeasure};
use crate::numeric::KahanSum;

/// Data-fit loss applied to `(prediction, target)` pairs in `ℝ^{d_meas}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    /// `½‖p − y‖₂²`.
    #[default]
    SquaredHalf,
    /// Componentwise Huber loss with threshold `delta`.
    Huber { delta: f64 },
}

impl Loss {
    pub fn value(&self, p: &[f64], y: &[f64]) -> f64 {
        match *self {
            Loss::SquaredHalf => 0.5 * p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            Loss::Huber { delta } => p
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let r = (a - b).abs();
                    if r <= delta {
                        0.5 * r * r
                    } else {
                        delta * (r - 0.5 * delta)
                    }
                })
                .sum(),
        }
    }

    /// `∇_p L(p, y)`.
    pub fn grad(&self, p: &[f64], y: &[f64]) -> Vec<f64> {
        match *self {
            Loss::SquaredHalf => p.iter().zip(y).map(|(a, b)| a - b).collect(),
            Loss::Huber { delta } => p.iter().zip(y).map(|(a, b)| (a - b).clamp(-delta, delta)).collect(),
        }
    }

    /// Lipschitz constant of the gradient.
    pub fn smoothness(&self) -> f64 {
        1.0
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            Loss::Huber { delta } if !(delta.is_finite() && delta > 0.0) => {
                Err(Error::InvalidArgument(format!("huber delta must be positive, got {delta}")))
            }
            _ => Ok(()),
        }
    }
}

/// Linear measurement map `M : ℝ^d → ℝ^{d_meas}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementOp {
    #[default]
    Identity,
    /// `(M u)_j = ⟨v⋄_j, u⟩`.
    Functionals { functionals: Vec<Vec<f64>> },
}

impl MeasurementOp {
    pub fn out_dim(&self, d: usize) -> usize {
        match self {
            MeasurementOp::Identity => d,
            MeasurementOp::Functionals { functionals } => functionals.len(),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if let MeasurementOp::Functionals { functionals } = self {
            if functionals.is_empty() {
                return Err(Error::InvalidArgument("measurement needs at least one functional".into()));
            }
            for v in functionals {
                check_dim("measurement functional", d, v.len())?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument("measurement functionals must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// `d_meas × d` matrix of the map.
    pub fn matrix(&self, d: usize) -> DMatrix<f64> {
        match self {
            MeasurementOp::Identity => DMatrix::identity(d, d),
            MeasurementOp::Functionals { functionals } => {
                DMatrix::from_fn(functionals.len(), d, |i, j| functionals[i][j])
            }
        }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        match self {
            MeasurementOp::Identity => u.to_vec(),
            MeasurementOp::Functionals { functionals } => {
                functionals.iter().map(|v| v.iter().zip(u).map(|(a, b)| a * b).sum()).collect()
            }
        }
    }

    /// `M* r = Σ_j r_j v⋄_j`.
    pub fn adjoint(&self, r: &[f64], d: usize) -> Vec<f64> {
        match self {
            MeasurementOp::Identity => r.to_vec(),
            MeasurementOp::Functionals { functionals } => {
                let mut out = vec![0.0; d];
                for (rj, v) in r.iter().zip(functionals) {
                    for (o, vi) in out.iter_mut().zip(v) {
                        *o += rj * vi;
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub data: Vec<(Vec<f64>, Vec<f64>)>,
    pub loss: Loss,
    pub measurement: MeasurementOp,
    pub lambda: f64,
    pub feature: FeatureMap,
    pub spec: DualPairSpec,
    /// When set, atom locations are restricted to these weight points.
    pub omega_grid: Option<Vec<Vec<f64>>>,
}

impl Problem {
    pub fn new(
        data: Vec<(Vec<f64>, Vec<f64>)>,
        loss: Loss,
        measurement: MeasurementOp,
        lambda: f64,
        feature: FeatureMap,
        spec: DualPairSpec,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("the dataset is empty".into()));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        loss.validate()?;
        measurement.validate(spec.dim)?;
        let dm = measurement.out_dim(spec.dim);
        for (x, y) in &data {
            check_dim("sample input", feature.input_dim(), x.len())?;
            check_dim("sample target", dm, y.len())?;
            if x.iter().chain(y).any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("dataset contains non-finite values".into()));
            }
        }
        Ok(Self {
            data,
            loss,
            measurement,
            lambda,
            feature,
            spec,
            omega_grid: None,
        })
    }

    /// Restrict atom locations to the in-ball nodes of the `per_dim` tensor
    /// grid (the grid used by [`grid_oracle`]).
    pub fn restricted_to_grid(mut self, per_dim: usize) -> Self {
        self.omega_grid = Some(self.feature.weight_grid(per_dim));
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn meas_dim(&self) -> usize {
        self.measurement.out_dim(self.spec.dim)
    }

    pub(crate) fn dictionary(&self) -> FeatureDictionary<'_> {
        FeatureDictionary {
            xs: self.data.iter().map(|(x, _)| x.as_slice()).collect(),
            feature: &self.feature,
            meas: self.measurement.matrix(self.spec.dim),
            domain: self.domain(),
        }
    }

    fn domain(&self) -> AtomDomain {
        match &self.omega_grid {
            Some(g) => AtomDomain::Grid(g.clone()),
            None => AtomDomain::ball(self.feature.weight_dim(), self.feature.radius()),
        }
    }

    fn targets(&self) -> Vec<Vec<f64>> {
        self.data.iter().map(|(_, y)| y.clone()).collect()
    }

    fn check_measure(&self, mu: &AtomicVectorMeasure) -> Result<()> {
        check_dim("measure payload", self.spec.dim, mu.dim())?;
        if let Some(dw) = mu.location_dim() {
            check_dim("atom location vs feature weight", self.feature.weight_dim(), dw)?;
        }
        if mu.norm() != self.spec.primal_norm {
            return Err(Error::InvalidArgument(format!(
                "measure payload norm {} differs from the space norm {}",
                mu.norm().name(),
                self.spec.primal_norm.name()
            )));
        }
        Ok(())
    }
}

/// `(1/N) Σ_n L(M (Aμ)(x_n), y_n) + λ |μ|(Ω)`.
pub fn objective(p: &Problem, mu: &AtomicVectorMeasure) -> Result<f64> {
    p.check_measure(mu)?;
    let fit: KahanSum = p
        .data
        .iter()
        .map(|(x, y)| p.loss.value(&p.measurement.apply(&mu.integrate_unchecked(&p.feature, x)), y))
        .collect();
    Ok(fit.value() / p.n() as f64 + p.lambda * mu.total_variation())
}

/// Residual duals `η_n = M* ∇L(M f(x_n), y_n) / N ∈ U⋄` of `μ`.
pub fn residual_duals(p: &Problem, mu: &AtomicVectorMeasure) -> Result<Vec<Vec<f64>>> {
    p.check_measure(mu)?;
    let inv = 1.0 / p.n() as f64;
    Ok(p
        .data
        .iter()
        .map(|(x, y)| {
            let pred = p.measurement.apply(&mu.integrate_unchecked(&p.feature, x));
            let g: Vec<f64> = p.loss.grad(&pred, y).iter().map(|v| v * inv).collect();
            p.measurement.adjoint(&g, p.spec.dim)
        })
        .collect())
}

/// Approximately maximize `|Σ_n φ(x_n, w) ⟨η_n, u⟩|` over admissible `w` and
/// extreme points `u` of the primal unit ball.
pub fn lmo(p: &Problem, residual_duals: &[Vec<f64>], restarts: usize, seed: u64) -> Result<LmoResult> {
    check_dim("residual duals", p.n(), residual_duals.len())?;
    for r in residual_duals {
        check_dim("residual dual", p.spec.dim, r.len())?;
    }
    let dict = FeatureDictionary {
        meas: DMatrix::identity(p.spec.dim, p.spec.dim),
        ..p.dictionary()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lmo::search(&dict, residual_duals, p.spec.primal_norm, restarts, &[], &mut rng)
}

/// Largest LMO score at `μ = 0` over the grid nodes (the problem's own grid
/// when restricted, otherwise the `grid_per_dim` tensor grid).
pub fn lambda_max(p: &Problem, grid_per_dim: usize) -> Result<f64> {
    let dict = FeatureDictionary {
        domain: AtomDomain::Grid(match &p.omega_grid {
            Some(g) => g.clone(),
            None => p.feature.weight_grid(grid_per_dim),
        }),
        ..p.dictionary()
    };
    let eta: Vec<Vec<f64>> = p
        .data
        .iter()
        .map(|(_, y)| p.loss.grad(&vec![0.0; y.len()], y).iter().map(|g| g / p.n() as f64).collect())
        .collect();
    zero_certificate(&dict, &eta, p.spec.primal_norm)
}

/// Best score of an exhaustive (grid-domain) dictionary against `eta`.
pub(crate) fn zero_certificate<D: AtomDictionary>(dict: &D, eta: &[Vec<f64>], norm: crate::Norm) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    Ok(lmo::search(dict, eta, norm, 0, &[], &mut rng)?.score)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub measure: AtomicVectorMeasure,
    pub objective_history: Vec<f64>,
    /// Best atom score at the last LMO call.
    pub certificate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Whether the certificate reached `λ(1 + tol)`.
    pub converged: bool,
}

impl SolverState {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().expect("history is never empty")
    }
}

pub fn fit(p: &Problem, opts: &SolverOptions) -> Result<SolverState> {
    let dict = p.dictionary();
    let targets = p.targets();
    let out = gcg::run(&dict, &targets, p.loss, p.lambda, p.spec.primal_norm, opts)?;
    let atoms = out.atoms.into_iter().map(|(w, c)| Atom::new(w, c)).collect();
    let measure = AtomicVectorMeasure::from_atoms(atoms, p.spec.dim, p.spec.primal_norm, p.feature.radius())?;
    Ok(SolverState {
        measure,
        objective_history: out.history,
        certificate: out.certificate,
        iterations: out.iterations,
        seed: opts.seed,
        converged: out.converged,
    })
}

#[cfg(test)]
mod tests;
