//! The fully discretized problem on a weight grid, solved directly.
//!
//! Independent of the conditional-gradient path: the design matrix is
//! assembled once, the step size comes from the exact spectral norm of the
//! design, and no atoms are inserted or merged.

use nalgebra::DMatrix;

use super::dictionary::AtomDictionary;
use super::prox::prox_norm;
use super::{Loss, Problem};
use crate::dual_pair::Norm;
use crate::error::{Error, Result};
use crate::numeric::KahanSum;

#[derive(Debug, Clone, PartialEq)]
pub struct GridOracleResult {
    pub objective: f64,
    /// Grid nodes, one per row of `coefficients`.
    pub grid: Vec<Vec<f64>>,
    /// `grid × d` optimal payloads.
    pub coefficients: Vec<Vec<f64>>,
    /// Objective after every accepted step (starts at `C = 0`).
    pub history: Vec<f64>,
    pub iterations: usize,
}

struct Discretized<'a> {
    /// `blocks[n][g]`: `d_meas × d` map of node `g`'s payload on sample `n`.
    blocks: Vec<Vec<DMatrix<f64>>>,
    targets: &'a [Vec<f64>],
    loss: Loss,
    lambda: f64,
    norm: Norm,
    d: usize,
}

impl Discretized<'_> {
    fn predictions(&self, c: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|row| {
                let mut p = vec![0.0; row.first().map_or(0, |b| b.nrows())];
                for (b, cg) in row.iter().zip(c) {
                    for (i, pi) in p.iter_mut().enumerate() {
                        for (j, cj) in cg.iter().enumerate() {
                            *pi += b[(i, j)] * cj;
                        }
                    }
                }
                p
            })
            .collect()
    }

    fn smooth(&self, preds: &[Vec<f64>]) -> f64 {
        let s: KahanSum = preds.iter().zip(self.targets).map(|(q, y)| self.loss.value(q, y)).collect();
        s.value() / self.targets.len() as f64
    }

    fn penalty(&self, c: &[Vec<f64>]) -> f64 {
        let s: KahanSum = c.iter().map(|cg| self.norm.value(cg)).collect();
        self.lambda * s.value()
    }

    fn gradient(&self, preds: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let inv = 1.0 / self.targets.len() as f64;
        let res: Vec<Vec<f64>> = preds.iter().zip(self.targets).map(|(q, y)| self.loss.grad(q, y)).collect();
        let g_count = self.blocks.first().map_or(0, |r| r.len());
        (0..g_count)
            .map(|g| {
                let mut out = vec![0.0; self.d];
                for (row, r) in self.blocks.iter().zip(&res) {
                    let b = &row[g];
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += inv * (0..b.nrows()).map(|i| b[(i, j)] * r[i]).sum::<f64>();
                    }
                }
                out
            })
            .collect()
    }

    /// The stacked `(N·d_meas) × (G·d)` design matrix.
    fn stacked(&self) -> DMatrix<f64> {
        let n = self.blocks.len();
        let g = self.blocks.first().map_or(0, |r| r.len());
        let dm = self.blocks.first().and_then(|r| r.first()).map_or(0, |b| b.nrows());
        DMatrix::from_fn(n * dm, g * self.d, |r, c| self.blocks[r / dm][c / self.d][(r % dm, c % self.d)])
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Minimize `(1/N) Σ L(M Σ_g φ(x_n, w_g) C_g, y_n) + λ Σ_g ‖C_g‖` over the
/// in-ball nodes of the `grid_per_dim` tensor grid by accelerated proximal
/// gradient, stopping when the gradient-mapping norm falls below `tol` or
/// no further descent is possible in floating point.
pub fn grid_oracle(p: &Problem, grid_per_dim: usize, max_iter: usize, tol: f64) -> Result<GridOracleResult> {
    if grid_per_dim == 0 {
        return Err(Error::InvalidArgument("grid_per_dim must be at least 1".into()));
    }
    let targets: Vec<Vec<f64>> = p.data.iter().map(|(_, y)| y.clone()).collect();
    let dict = p.dictionary();
    solve_on_grid(&dict, p.feature.weight_grid(grid_per_dim), &targets, p.loss, p.lambda, p.spec.primal_norm, max_iter, tol)
}

/// The discretized group-lasso over the given location nodes of any
/// dictionary.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_on_grid<D: AtomDictionary>(
    dict: &D,
    grid: Vec<Vec<f64>>,
    targets: &[Vec<f64>],
    loss: Loss,
    lambda: f64,
    norm: Norm,
    max_iter: usize,
    tol: f64,
) -> Result<GridOracleResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("weight grid has no node inside the ball".into()));
    }
    let d = dict.payload_dim();
    let blocks = (0..dict.n_samples())
        .map(|n| grid.iter().map(|w| dict.block(n, w)).collect())
        .collect();
    let problem = Discretized {
        blocks,
        targets,
        loss,
        lambda,
        norm,
        d,
    };
    let lip0 = loss.smoothness() / targets.len() as f64 * spectral_norm(&problem.stacked()).powi(2);

    let mut x = vec![vec![0.0; d]; grid.len()];
    let mut fx = problem.smooth(&problem.predictions(&x)) + problem.penalty(&x);
    let mut history = vec![fx];
    if lip0 == 0.0 {
        return Ok(GridOracleResult {
            objective: fx,
            grid,
            coefficients: x,
            history,
            iterations: 0,
        });
    }
    let mut lip = lip0 * (1.0 + 1e-12);
    let mut y = x.clone();
    let mut y_is_x = true;
    let mut t = 1.0_f64;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let py = problem.predictions(&y);
        let fy = problem.smooth(&py);
        let gy = problem.gradient(&py);
        if gy.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Solver("non-finite gradient in grid oracle".into()));
        }
        let mut step = None;
        for _ in 0..30 {
            let z: Vec<Vec<f64>> = y
                .iter()
                .zip(&gy)
                .map(|(yg, gg)| {
                    let v: Vec<f64> = yg.iter().zip(gg).map(|(a, b)| a - b / lip).collect();
                    prox_norm(norm, &v, lambda / lip)
                })
                .collect();
            let fz = problem.smooth(&problem.predictions(&z));
            let mut lin = 0.0;
            let mut quad = 0.0;
            for ((zg, yg), gg) in z.iter().zip(&y).zip(&gy) {
                for ((a, b), g) in zg.iter().zip(yg).zip(gg) {
                    lin += g * (a - b);
                    quad += (a - b) * (a - b);
                }
            }
            if fz <= fy + lin + 0.5 * lip * quad + 1e-14 * fy.abs().max(1e-300) {
                step = Some((z, fz, quad.sqrt()));
                break;
            }
            lip *= 2.0;
        }
        let Some((z, fz, moved)) = step else {
            return Err(Error::Solver("grid oracle step-size line search failed".into()));
        };
        let total_z = fz + problem.penalty(&z);
        let mapping = lip * moved;
        if total_z > fx {
            // A plain step from the accepted iterate that fails to descend
            // means the iterate is stationary to working precision.
            if y_is_x || mapping <= tol {
                break;
            }
            // Momentum overshoot: restart from the last accepted iterate.
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
            .map(|(zg, xg)| zg.iter().zip(xg).map(|(a, b)| a + mom * (a - b)).collect())
            .collect();
        y_is_x = mom == 0.0;
        x = z;
        fx = total_z;
        t = t_next;
        history.push(fx);
        if mapping <= tol {
            break;
        }
    }
    Ok(GridOracleResult {
        objective: fx,
        grid,
        coefficients: x,
        history,
        iterations,
    })
}
