//! Generalized conditional gradient with atom insertion, accelerated
//! proximal refitting and coalescing, generic over [`AtomDictionary`].

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dictionary::AtomDictionary;
use super::lmo::search;
use super::prox::{prox_norm, soft_threshold};
use super::Loss;
use crate::dual_pair::Norm;
use crate::error::{Error, Result};
use crate::measure::{MERGE_TOL, PRUNE_TOL};
use crate::numeric::{linf_dist, KahanSum};

/// How atom coefficients are refitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyMode {
    /// Atoms are extreme points `δ_w u` with `u` held fixed; only scalar
    /// weights `a_m` are refitted under `λ Σ |a_m|`.
    #[default]
    L1,
    /// Free payloads `c_m` refitted under `λ Σ ‖c_m‖`.
    Group,
}

impl std::str::FromStr for PenaltyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(PenaltyMode::L1),
            "group" => Ok(PenaltyMode::Group),
            other => Err(Error::InvalidArgument(format!("unknown penalty mode `{other}` (expected l1|group)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_atoms: usize,
    pub restarts: usize,
    pub tol: f64,
    pub refit_max_iter: usize,
    pub refit_tol: f64,
    pub seed: u64,
    pub mode: PenaltyMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_atoms: 50,
            restarts: super::lmo::DEFAULT_RESTARTS,
            tol: 1e-3,
            refit_max_iter: 5000,
            refit_tol: 1e-8,
            seed: 0,
            mode: PenaltyMode::L1,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_atoms == 0 {
            return Err(Error::InvalidArgument("max_atoms must be at least 1".into()));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) || !(self.refit_tol.is_finite() && self.refit_tol >= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be finite and non-negative".into()));
        }
        if self.refit_max_iter == 0 {
            return Err(Error::InvalidArgument("refit max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of a generic run: atoms as `(location, payload)` pairs.
#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub atoms: Vec<(Vec<f64>, Vec<f64>)>,
    pub history: Vec<f64>,
    pub certificate: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct Active {
    loc: Vec<f64>,
    /// Fixed extreme direction (L1 mode only).
    dir: Option<Vec<f64>>,
    coef: Vec<f64>,
    /// Per-sample `d_meas × k` design: `block(n, loc)` times the direction.
    design: Vec<DMatrix<f64>>,
}

impl Active {
    fn payload(&self) -> Vec<f64> {
        match &self.dir {
            Some(u) => u.iter().map(|x| x * self.coef[0]).collect(),
            None => self.coef.clone(),
        }
    }
}

struct Engine<'a, D: AtomDictionary> {
    dict: &'a D,
    targets: &'a [Vec<f64>],
    loss: Loss,
    lambda: f64,
    norm: Norm,
    mode: PenaltyMode,
    opts: &'a SolverOptions,
    lipschitz: f64,
}

type Coefs = Vec<Vec<f64>>;

impl<D: AtomDictionary> Engine<'_, D> {
    fn n(&self) -> usize {
        self.dict.n_samples()
    }

    fn make_atom(&self, loc: Vec<f64>, dir: Option<Vec<f64>>, coef: Vec<f64>) -> Active {
        let design = (0..self.n())
            .map(|n| {
                let b = self.dict.block(n, &loc);
                match &dir {
                    Some(u) => &b * DMatrix::from_column_slice(u.len(), 1, u),
                    None => b,
                }
            })
            .collect();
        Active { loc, dir, coef, design }
    }

    fn predictions(&self, atoms: &[Active], coefs: &Coefs) -> Vec<Vec<f64>> {
        let dm = self.dict.meas_dim();
        (0..self.n())
            .map(|n| {
                let mut p = vec![0.0; dm];
                for (a, c) in atoms.iter().zip(coefs) {
                    let e = &a.design[n];
                    for (i, pi) in p.iter_mut().enumerate() {
                        for (k, ck) in c.iter().enumerate() {
                            *pi += e[(i, k)] * ck;
                        }
                    }
                }
                p
            })
            .collect()
    }

    fn smooth(&self, preds: &[Vec<f64>]) -> f64 {
        let s: KahanSum = preds.iter().zip(self.targets).map(|(p, y)| self.loss.value(p, y)).collect();
        s.value() / self.n() as f64
    }

    fn residual_duals(&self, preds: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let inv = 1.0 / self.n() as f64;
        preds
            .iter()
            .zip(self.targets)
            .map(|(p, y)| self.loss.grad(p, y).iter().map(|g| g * inv).collect())
            .collect()
    }

    fn penalty_of(&self, c: &[f64]) -> f64 {
        match self.mode {
            PenaltyMode::L1 => c[0].abs(),
            PenaltyMode::Group => self.norm.value(c),
        }
    }

    fn penalty(&self, coefs: &Coefs) -> f64 {
        let s: KahanSum = coefs.iter().map(|c| self.penalty_of(c)).collect();
        self.lambda * s.value()
    }

    fn total(&self, atoms: &[Active], coefs: &Coefs) -> f64 {
        self.smooth(&self.predictions(atoms, coefs)) + self.penalty(coefs)
    }

    fn gradient(&self, atoms: &[Active], preds: &[Vec<f64>]) -> Coefs {
        let eta = self.residual_duals(preds);
        atoms
            .iter()
            .map(|a| {
                let k = a.coef.len();
                let mut g = vec![0.0; k];
                for (e, r) in a.design.iter().zip(&eta) {
                    for (kk, gk) in g.iter_mut().enumerate() {
                        *gk += (0..e.nrows()).map(|i| e[(i, kk)] * r[i]).sum::<f64>();
                    }
                }
                g
            })
            .collect()
    }

    fn prox(&self, v: &[f64], tau: f64) -> Vec<f64> {
        match self.mode {
            PenaltyMode::L1 => vec![soft_threshold(v[0], tau)],
            PenaltyMode::Group => prox_norm(self.norm, v, tau),
        }
    }

    /// FISTA with backtracking and restart-on-increase. Only iterates that
    /// do not increase the objective are accepted, so the returned
    /// objective never exceeds the starting one.
    fn refit(&mut self, atoms: &mut [Active]) -> Result<f64> {
        let mut x: Coefs = atoms.iter().map(|a| a.coef.clone()).collect();
        let mut fx = self.total(atoms, &x);
        let mut y = x.clone();
        let mut y_is_x = true;
        let mut t = 1.0_f64;
        let mut lip = (self.lipschitz * 0.5).max(1e-12);
        let mut quiet = 0;
        for _ in 0..self.opts.refit_max_iter {
            let py = self.predictions(atoms, &y);
            let fy = self.smooth(&py);
            let gy = self.gradient(atoms, &py);
            if gy.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Solver("non-finite gradient in refit".into()));
            }
            let mut accepted = None;
            for _ in 0..80 {
                let z: Coefs = y
                    .iter()
                    .zip(&gy)
                    .map(|(yi, gi)| {
                        let step: Vec<f64> = yi.iter().zip(gi).map(|(a, b)| a - b / lip).collect();
                        self.prox(&step, self.lambda / lip)
                    })
                    .collect();
                let fz = self.smooth(&self.predictions(atoms, &z));
                let mut lin = 0.0;
                let mut quad = 0.0;
                for ((zi, yi), gi) in z.iter().zip(&y).zip(&gy) {
                    for ((a, b), g) in zi.iter().zip(yi).zip(gi) {
                        lin += g * (a - b);
                        quad += (a - b) * (a - b);
                    }
                }
                if fz <= fy + lin + 0.5 * lip * quad + 1e-15 * fy.abs() {
                    accepted = Some((z, fz));
                    break;
                }
                lip *= 2.0;
            }
            let Some((z, fz)) = accepted else {
                return Err(Error::Solver("refit line search failed".into()));
            };
            let total_z = fz + self.penalty(&z);
            if total_z > fx {
                if y_is_x {
                    break;
                }
                y = x.clone();
                y_is_x = true;
                t = 1.0;
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let mom = (t - 1.0) / t_next;
            y = z
                .iter()
                .zip(&x)
                .map(|(zi, xi)| zi.iter().zip(xi).map(|(a, b)| a + mom * (a - b)).collect())
                .collect();
            y_is_x = mom == 0.0;
            let rel = (fx - total_z) / fx.abs().max(f64::MIN_POSITIVE);
            x = z;
            fx = total_z;
            t = t_next;
            if rel <= self.opts.refit_tol {
                quiet += 1;
                if quiet >= 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        self.lipschitz = lip;
        for (a, c) in atoms.iter_mut().zip(x) {
            a.coef = c;
        }
        Ok(fx)
    }

    /// Merge atoms sharing a location, re-express each group in the mode's
    /// atom form and drop negligible ones.
    fn coalesce(&self, atoms: Vec<Active>) -> Vec<Active> {
        let mut groups: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for a in &atoms {
            let c = a.payload();
            match groups.iter_mut().find(|(w, _)| linf_dist(w, &a.loc) <= MERGE_TOL) {
                Some((_, acc)) => acc.iter_mut().zip(&c).for_each(|(s, v)| *s += v),
                None => groups.push((a.loc.clone(), c)),
            }
        }
        let mut out = Vec::new();
        for (loc, c) in groups {
            if self.norm.value(&c) < PRUNE_TOL {
                continue;
            }
            match self.mode {
                PenaltyMode::Group => out.push(self.make_atom(loc, None, c)),
                PenaltyMode::L1 => match self.norm {
                    Norm::L1 => {
                        for (j, cj) in c.iter().enumerate() {
                            if cj.abs() >= PRUNE_TOL {
                                let mut u = vec![0.0; c.len()];
                                u[j] = cj.signum();
                                out.push(self.make_atom(loc.clone(), Some(u), vec![cj.abs()]));
                            }
                        }
                    }
                    _ => {
                        let a = self.norm.value(&c);
                        let u = c.iter().map(|v| v / a).collect();
                        out.push(self.make_atom(loc, Some(u), vec![a]));
                    }
                },
            }
        }
        out
    }

    fn is_duplicate(&self, atoms: &[Active], loc: &[f64], dir: &[f64]) -> bool {
        atoms.iter().any(|a| {
            linf_dist(&a.loc, loc) <= MERGE_TOL
                && match (&self.mode, &a.dir) {
                    (PenaltyMode::L1, Some(u)) => {
                        let d: f64 = u.iter().zip(dir).map(|(p, q)| p * q).sum();
                        let nu = Norm::L2.value(u) * Norm::L2.value(dir);
                        (d.abs() - nu).abs() <= 1e-12 * nu.max(1.0)
                    }
                    _ => true,
                }
        })
    }
}

pub(crate) fn run<D: AtomDictionary>(
    dict: &D,
    targets: &[Vec<f64>],
    loss: Loss,
    lambda: f64,
    norm: Norm,
    opts: &SolverOptions,
) -> Result<Outcome> {
    opts.validate()?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive and finite, got {lambda}")));
    }
    if norm == Norm::LInf && opts.mode == PenaltyMode::L1 {
        return Err(Error::Unsupported(
            "L1 mode needs a payload norm with a finite or closed-form extreme-point set (l1 or l2)".into(),
        ));
    }
    let mut eng = Engine {
        dict,
        targets,
        loss,
        lambda,
        norm,
        mode: opts.mode,
        opts,
        lipschitz: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut atoms: Vec<Active> = Vec::new();
    let mut history = vec![eng.total(&atoms, &Vec::new())];
    let mut iterations = 0;
    let max_outer = 20 * opts.max_atoms + 20;
    let mut stalls = 0;
    let (certificate, converged) = loop {
        let coefs: Coefs = atoms.iter().map(|a| a.coef.clone()).collect();
        let eta = eng.residual_duals(&eng.predictions(&atoms, &coefs));
        let extra: Vec<Vec<f64>> = atoms.iter().map(|a| a.loc.clone()).collect();
        let best = search(dict, &eta, norm, opts.restarts, &extra, &mut rng)?;
        if best.score <= lambda * (1.0 + opts.tol) {
            break (best.score, true);
        }
        if iterations >= max_outer || stalls >= 3 {
            break (best.score, false);
        }
        let inserting = !eng.is_duplicate(&atoms, &best.loc, &best.direction);
        if inserting {
            if atoms.len() >= opts.max_atoms {
                break (best.score, false);
            }
            let (dir, coef) = match opts.mode {
                PenaltyMode::L1 => (Some(best.direction.clone()), vec![0.0]),
                PenaltyMode::Group => (None, vec![0.0; dict.payload_dim()]),
            };
            atoms.push(eng.make_atom(best.loc.clone(), dir, coef));
        }
        let before = *history.last().expect("history starts non-empty");
        let refitted = eng.refit(&mut atoms)?;
        let merged = eng.coalesce(atoms.clone());
        let merged_coefs: Coefs = merged.iter().map(|a| a.coef.clone()).collect();
        let merged_obj = eng.total(&merged, &merged_coefs);
        let obj = if merged_obj <= refitted {
            atoms = merged;
            merged_obj
        } else {
            atoms.retain(|a| a.coef.iter().any(|c| *c != 0.0));
            refitted
        };
        stalls = if !inserting && obj >= before { stalls + 1 } else { 0 };
        history.push(obj);
        iterations += 1;
    };
    Ok(Outcome {
        atoms: atoms.iter().map(|a| (a.loc.clone(), a.payload())).collect(),
        history,
        certificate,
        iterations,
        converged,
    })
}
