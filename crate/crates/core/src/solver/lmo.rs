//! Linear minimization oracle over extreme atoms `δ_ℓ u`.

use rand::Rng;
use rayon::prelude::*;

use super::dictionary::{AtomDictionary, AtomDomain};
use crate::dual_pair::Norm;
use crate::error::{Error, Result};
use crate::rkbs::random_in_ball;

/// Best extreme atom found by the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct LmoResult {
    pub loc: Vec<f64>,
    /// Extreme point of the primal unit ball maximizing `⟨v(ℓ), u⟩`.
    pub direction: Vec<f64>,
    /// `‖v(ℓ)‖_dual`.
    pub score: f64,
}

/// Default number of random ascent starts.
pub const DEFAULT_RESTARTS: usize = 32;
/// Cap on projected-gradient ascent steps per start.
pub const ASCENT_STEPS: usize = 200;

/// Score and maximizing extreme direction for the correlation vector `v`.
pub fn extreme_direction(primal: Norm, v: &[f64]) -> (Vec<f64>, f64) {
    let dual = primal.conjugate();
    (dual.witness(v), dual.value(v))
}

fn evaluate<D: AtomDictionary>(dict: &D, eta: &[Vec<f64>], primal: Norm, loc: &[f64]) -> Result<(Vec<f64>, f64)> {
    let v = dict.correlation(eta, loc);
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Solver("non-finite correlation in LMO".into()));
    }
    Ok(extreme_direction(primal, &v))
}

/// Projected gradient ascent on `ℓ ↦ ‖v(ℓ)‖_dual` with Armijo backtracking.
/// The gradient of the active linear piece `⟨v(ℓ), u*⟩` is used.
fn ascend<D: AtomDictionary>(dict: &D, eta: &[Vec<f64>], primal: Norm, start: &[f64]) -> Result<LmoResult> {
    let domain = dict.domain();
    let scale = match domain {
        AtomDomain::Balls(b) => b.iter().map(|b| b.radius).fold(0.0, f64::max),
        AtomDomain::Grid(_) => 1.0,
    };
    let mut loc = start.to_vec();
    domain.project(&mut loc);
    let (mut u, mut score) = evaluate(dict, eta, primal, &loc)?;
    let mut step: Option<f64> = None;
    for _ in 0..ASCENT_STEPS {
        let g = dict.correlation_grad(eta, &loc, &u);
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver("non-finite gradient in LMO ascent".into()));
        }
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn == 0.0 {
            break;
        }
        let mut t = step.unwrap_or(0.5 * scale / gn);
        let mut accepted = None;
        for _ in 0..40 {
            let mut cand: Vec<f64> = loc.iter().zip(&g).map(|(l, gi)| l + t * gi).collect();
            domain.project(&mut cand);
            let moved: f64 = cand.iter().zip(&loc).zip(&g).map(|((c, l), gi)| (c - l) * gi).sum();
            let (cu, cs) = evaluate(dict, eta, primal, &cand)?;
            if moved > 0.0 && cs >= score + 1e-4 * moved {
                accepted = Some((cand, cu, cs));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cu, cs)) = accepted else { break };
        let gain = cs - score;
        loc = cand;
        u = cu;
        score = cs;
        step = Some(2.0 * t);
        if gain <= 1e-14 * score.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(LmoResult { loc, direction: u, score })
}

/// Maximize the certificate over the dictionary's domain.
///
/// Grid domains are enumerated. Ball domains use `restarts` uniform random
/// starts followed by the `extra_starts`; all starts are drawn up front so
/// the result does not depend on thread scheduling, and ties resolve to the
/// earliest start.
pub fn search<D: AtomDictionary, R: Rng>(
    dict: &D,
    eta: &[Vec<f64>],
    primal: Norm,
    restarts: usize,
    extra_starts: &[Vec<f64>],
    rng: &mut R,
) -> Result<LmoResult> {
    let candidates: Vec<LmoResult> = match dict.domain() {
        AtomDomain::Grid(points) => points
            .par_iter()
            .map(|w| {
                evaluate(dict, eta, primal, w).map(|(direction, score)| LmoResult {
                    loc: w.clone(),
                    direction,
                    score,
                })
            })
            .collect::<Result<_>>()?,
        AtomDomain::Balls(blocks) => {
            let mut starts: Vec<Vec<f64>> = (0..restarts)
                .map(|_| blocks.iter().flat_map(|b| random_in_ball(rng, b.dim, b.radius)).collect())
                .collect();
            starts.extend(extra_starts.iter().cloned());
            if starts.is_empty() {
                starts.push(vec![0.0; dict.location_dim()]);
            }
            starts
                .par_iter()
                .map(|s| ascend(dict, eta, primal, s))
                .collect::<Result<_>>()?
        }
    };
    let mut best: Option<LmoResult> = None;
    for c in candidates {
        if best.as_ref().is_none_or(|b| c.score > b.score) {
            best = Some(c);
        }
    }
    best.ok_or_else(|| Error::Solver("empty LMO search domain".into()))
}
