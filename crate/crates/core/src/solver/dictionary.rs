//! The atom dictionaries the conditional-gradient machinery runs on.
//!
//! An atom sits at a location `ℓ` and carries a payload `c ∈ ℝ^d`. On
//! sample `n` it produces the measurement `block(n, ℓ) · c ∈ ℝ^{d_meas}`.
//! The plain regression problem and the lifted hypernetwork problem are
//! both dictionaries; everything downstream is written once against this
//! trait.

use nalgebra::DMatrix;

use crate::feature::FeatureMap;

/// One Euclidean ball factor of a product-of-balls location domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BallBlock {
    pub dim: usize,
    pub radius: f64,
}

/// Where atom locations may be placed.
#[derive(Debug, Clone, PartialEq)]
pub enum AtomDomain {
    /// Product of Euclidean balls; the location is the concatenation of the
    /// block coordinates.
    Balls(Vec<BallBlock>),
    /// A finite set of admissible locations, searched exhaustively.
    Grid(Vec<Vec<f64>>),
}

impl AtomDomain {
    pub fn ball(dim: usize, radius: f64) -> Self {
        AtomDomain::Balls(vec![BallBlock { dim, radius }])
    }

    /// Euclidean projection onto the product of balls (identity for grids).
    pub fn project(&self, loc: &mut [f64]) {
        if let AtomDomain::Balls(blocks) = self {
            let mut start = 0;
            for b in blocks {
                let seg = &mut loc[start..start + b.dim];
                let n = seg.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > b.radius {
                    let k = b.radius / n;
                    seg.iter_mut().for_each(|v| *v *= k);
                }
                start += b.dim;
            }
        }
    }
}

pub trait AtomDictionary: Sync {
    fn location_dim(&self) -> usize;
    fn payload_dim(&self) -> usize;
    fn meas_dim(&self) -> usize;
    fn n_samples(&self) -> usize;
    fn domain(&self) -> &AtomDomain;

    /// The `d_meas × d` matrix mapping a payload at `loc` to sample `n`'s
    /// measurement.
    fn block(&self, n: usize, loc: &[f64]) -> DMatrix<f64>;

    /// `v(ℓ) = Σ_n block(n, ℓ)ᵀ η_n ∈ ℝ^d`.
    fn correlation(&self, eta: &[Vec<f64>], loc: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.payload_dim()];
        for (n, e) in eta.iter().enumerate() {
            let b = self.block(n, loc);
            for (j, vj) in v.iter_mut().enumerate() {
                *vj += (0..self.meas_dim()).map(|i| b[(i, j)] * e[i]).sum::<f64>();
            }
        }
        v
    }

    /// `∇_ℓ ⟨v(ℓ), u⟩` for a fixed payload direction `u`.
    fn correlation_grad(&self, eta: &[Vec<f64>], loc: &[f64], u: &[f64]) -> Vec<f64>;
}

/// The dictionary of the plain learning problem: block `φ(x_n, w)·M`.
#[derive(Debug, Clone)]
pub struct FeatureDictionary<'a> {
    pub xs: Vec<&'a [f64]>,
    pub feature: &'a FeatureMap,
    /// `d_meas × d` measurement matrix.
    pub meas: DMatrix<f64>,
    pub domain: AtomDomain,
}

impl FeatureDictionary<'_> {
    /// `Mᵀ η` for one sample.
    fn lift(&self, e: &[f64]) -> Vec<f64> {
        let m = &self.meas;
        (0..m.ncols())
            .map(|j| (0..m.nrows()).map(|i| m[(i, j)] * e[i]).sum())
            .collect()
    }
}

impl AtomDictionary for FeatureDictionary<'_> {
    fn location_dim(&self) -> usize {
        self.feature.weight_dim()
    }

    fn payload_dim(&self) -> usize {
        self.meas.ncols()
    }

    fn meas_dim(&self) -> usize {
        self.meas.nrows()
    }

    fn n_samples(&self) -> usize {
        self.xs.len()
    }

    fn domain(&self) -> &AtomDomain {
        &self.domain
    }

    fn block(&self, n: usize, loc: &[f64]) -> DMatrix<f64> {
        &self.meas * self.feature.value(self.xs[n], loc)
    }

    fn correlation(&self, eta: &[Vec<f64>], loc: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.payload_dim()];
        for (x, e) in self.xs.iter().zip(eta) {
            let p = self.feature.value(x, loc);
            if p != 0.0 {
                for (vj, lj) in v.iter_mut().zip(self.lift(e)) {
                    *vj += p * lj;
                }
            }
        }
        v
    }

    fn correlation_grad(&self, eta: &[Vec<f64>], loc: &[f64], u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; loc.len()];
        for (x, e) in self.xs.iter().zip(eta) {
            let s: f64 = self.lift(e).iter().zip(u).map(|(a, b)| a * b).sum();
            if s != 0.0 {
                for (gi, di) in g.iter_mut().zip(self.feature.grad_w(x, loc)) {
                    *gi += s * di;
                }
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::{Activation, Beta};

    #[test]
    fn projection_onto_product_of_balls() {
        let d = AtomDomain::Balls(vec![BallBlock { dim: 2, radius: 1.0 }, BallBlock { dim: 1, radius: 2.0 }]);
        let mut l = vec![3.0, 4.0, -5.0];
        d.project(&mut l);
        assert!((l[0] - 0.6).abs() < 1e-15 && (l[1] - 0.8).abs() < 1e-15);
        assert_eq!(l[2], -2.0);
    }

    #[test]
    fn default_correlation_matches_override() {
        let f = FeatureMap::neural(Activation::Tanh, 1, 1.0, Beta::SmoothBump).unwrap();
        let xs = [vec![0.3], vec![-0.7], vec![1.1]];
        let meas = DMatrix::from_row_slice(1, 2, &[0.5, -1.5]);
        let dict = FeatureDictionary {
            xs: xs.iter().map(|x| x.as_slice()).collect(),
            feature: &f,
            meas,
            domain: AtomDomain::ball(2, 1.0),
        };
        let eta = vec![vec![0.2], vec![-0.4], vec![0.9]];
        let loc = [0.4, -0.3];
        let fast = dict.correlation(&eta, &loc);
        // Default trait path through explicit blocks.
        let mut slow = [0.0; 2];
        for (n, e) in eta.iter().enumerate() {
            let b = dict.block(n, &loc);
            for j in 0..2 {
                slow[j] += b[(0, j)] * e[0];
            }
        }
        for j in 0..2 {
            assert!((fast[j] - slow[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn correlation_gradient_matches_finite_differences() {
        let f = FeatureMap::neural(Activation::Sigmoid, 2, 2.0, Beta::SmoothBump).unwrap();
        let xs = [vec![0.3, 0.1], vec![-0.7, 0.5]];
        let dict = FeatureDictionary {
            xs: xs.iter().map(|x| x.as_slice()).collect(),
            feature: &f,
            meas: DMatrix::identity(2, 2),
            domain: AtomDomain::ball(3, 2.0),
        };
        let eta = vec![vec![0.2, -0.1], vec![-0.4, 0.3]];
        let u = [0.6, -0.8];
        let loc = [0.2, -0.5, 0.4];
        let g = dict.correlation_grad(&eta, &loc, &u);
        let h = 1e-6;
        for k in 0..3 {
            let mut lp = loc;
            let mut lm = loc;
            lp[k] += h;
            lm[k] -= h;
            let fp: f64 = dict.correlation(&eta, &lp).iter().zip(&u).map(|(a, b)| a * b).sum();
            let fm: f64 = dict.correlation(&eta, &lm).iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!((g[k] - (fp - fm) / (2.0 * h)).abs() < 1e-8);
        }
    }
}
