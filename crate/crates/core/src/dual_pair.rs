//! Finite-dimensional dual pairs `(R^d, lp) <-> (R^d, lq)` with the dot
//! product as pairing, and twin operators represented as matrices.
//!
//! Every pair instantiated here is norming with pairing constant `C = 1`:
//! the dual norm of `u⋄` is the supremum of `|⟨u⋄, u⟩|` over the primal unit
//! ball, and both suprema are attained at the analytic witnesses returned by
//! [`DualPairSpec::dual_witness`] and [`DualPairSpec::primal_witness`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::dot;

/// The norms available on either side of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    #[serde(rename = "linf")]
    LInf,
}

impl Norm {
    /// Conjugate-exponent norm (`L1 <-> LInf`, `L2 <-> L2`).
    pub fn conjugate(self) -> Norm {
        match self {
            Norm::L1 => Norm::LInf,
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
        }
    }

    pub fn value(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::LInf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// A vector `s` with `‖s‖_conj = 1` (or `s = 0` for `v = 0`) and
    /// `⟨s, v⟩ = ‖v‖`.
    pub fn witness(self, v: &[f64]) -> Vec<f64> {
        match self {
            Norm::L1 => v.iter().map(|&x| sign(x)).collect(),
            Norm::L2 => {
                let n = self.value(v);
                if n == 0.0 {
                    let mut e = vec![0.0; v.len()];
                    if let Some(first) = e.first_mut() {
                        *first = 1.0;
                    }
                    e
                } else {
                    v.iter().map(|x| x / n).collect()
                }
            }
            Norm::LInf => {
                let j = argmax_abs(v);
                let mut e = vec![0.0; v.len()];
                if let Some(j) = j {
                    e[j] = sign(v[j]);
                }
                e
            }
        }
    }

    /// Induced operator norm of `a` with this norm on domain and codomain.
    pub fn induced_matrix_norm(self, a: &DMatrix<f64>) -> f64 {
        match self {
            // max column absolute sum
            Norm::L1 => (0..a.ncols())
                .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Norm::L2 => {
                if a.is_empty() {
                    0.0
                } else {
                    a.clone()
                        .svd(false, false)
                        .singular_values
                        .iter()
                        .fold(0.0, |m: f64, s| m.max(*s))
                }
            }
            // max row absolute sum
            Norm::LInf => (0..a.nrows())
                .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::LInf => "linf",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" => Ok(Norm::LInf),
            other => Err(Error::InvalidArgument(format!("unknown norm '{other}'"))),
        }
    }
}

/// `sign(0) = +1` so witnesses stay on the unit sphere.
fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Index of the largest absolute entry; ties resolve to the lowest index.
pub(crate) fn argmax_abs(v: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.iter().enumerate() {
        let a = x.abs();
        match best {
            Some((_, b)) if a <= b => {}
            _ => best = Some((i, a)),
        }
    }
    best.map(|(i, _)| i)
}

/// A finite-dimensional conjugate dual pair `(U, U⋄)` on `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualPairSpec {
    pub dim: usize,
    pub primal_norm: Norm,
}

impl DualPairSpec {
    pub fn new(dim: usize, primal_norm: Norm) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dual pair dimension must be positive".into()));
        }
        Ok(Self { dim, primal_norm })
    }

    pub fn dual_norm(&self) -> Norm {
        self.primal_norm.conjugate()
    }

    /// Constant in `|⟨u⋄, u⟩| ≤ C ‖u⋄‖ ‖u‖`; always 1 for conjugate pairs.
    pub fn pairing_constant(&self) -> f64 {
        1.0
    }

    pub fn pair(&self, u_dual: &[f64], u: &[f64]) -> Result<f64> {
        check_dim("pair (dual slot)", self.dim, u_dual.len())?;
        check_dim("pair (primal slot)", self.dim, u.len())?;
        Ok(dot(u_dual, u))
    }

    pub fn primal_norm_value(&self, u: &[f64]) -> Result<f64> {
        check_dim("primal norm", self.dim, u.len())?;
        Ok(self.primal_norm.value(u))
    }

    pub fn dual_norm_value(&self, u_dual: &[f64]) -> Result<f64> {
        check_dim("dual norm", self.dim, u_dual.len())?;
        Ok(self.dual_norm().value(u_dual))
    }

    /// Dual-unit-norm `s` with `⟨s, u⟩ = ‖u‖_primal`.
    pub fn dual_witness(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim("dual witness", self.dim, u.len())?;
        Ok(self.primal_norm.witness(u))
    }

    /// Extreme point `u` of the primal unit ball with `⟨u⋄, u⟩ = ‖u⋄‖_dual`.
    pub fn primal_witness(&self, u_dual: &[f64]) -> Result<Vec<f64>> {
        check_dim("primal witness", self.dim, u_dual.len())?;
        Ok(self.dual_norm().witness(u_dual))
    }
}

/// A bounded bilinear form `T(u⋄, u) = u⋄ᵀ A u` on `U⋄ × U`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinOperator {
    matrix: DMatrix<f64>,
}

impl TwinOperator {
    /// `matrix` has shape `dim⋄ × dim`.
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        Self::new(DMatrix::identity(dim, dim) * scale)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        for r in rows {
            check_dim("twin operator row", m, r.len())?;
        }
        Ok(Self::new(DMatrix::from_fn(n, m, |i, j| rows[i][j])))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn form(&self, u_dual: &[f64], u: &[f64]) -> Result<f64> {
        check_dim("twin form (dual slot)", self.matrix.nrows(), u_dual.len())?;
        check_dim("twin form (primal slot)", self.matrix.ncols(), u.len())?;
        let mut acc = 0.0;
        for (i, ud) in u_dual.iter().enumerate() {
            for (j, uj) in u.iter().enumerate() {
                acc += ud * self.matrix[(i, j)] * uj;
            }
        }
        Ok(acc)
    }

    /// `T_U u`, the primal action (`A u`).
    pub fn apply_primal(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim("twin primal action", self.matrix.ncols(), u.len())?;
        Ok((0..self.matrix.nrows())
            .map(|i| (0..self.matrix.ncols()).map(|j| self.matrix[(i, j)] * u[j]).sum())
            .collect())
    }

    /// `T_{U⋄} u⋄`, the dual action (`Aᵀ u⋄`).
    pub fn apply_dual(&self, u_dual: &[f64]) -> Result<Vec<f64>> {
        check_dim("twin dual action", self.matrix.nrows(), u_dual.len())?;
        Ok((0..self.matrix.ncols())
            .map(|j| {
                (0..self.matrix.nrows())
                    .map(|i| self.matrix[(i, j)] * u_dual[i])
                    .sum()
            })
            .collect())
    }

    /// `‖T‖_Twin = sup |T(u⋄, u)|` over both unit balls.
    ///
    /// The supremum is evaluated on the extreme points of whichever ball is
    /// a polytope with `2d` vertices, pairing each vertex with its analytic
    /// dual witness. For the Euclidean pair it is `sqrt(λ_max(AᵀA))`.
    pub fn twin_norm(&self, spec: &DualPairSpec) -> Result<f64> {
        check_dim("twin norm (rows)", spec.dim, self.matrix.nrows())?;
        check_dim("twin norm (cols)", spec.dim, self.matrix.ncols())?;
        let a = &self.matrix;
        let value = match spec.primal_norm {
            // vertices ±e_j of the primal ball; sup over u⋄ gives ‖A e_j‖_1
            Norm::L1 => (0..a.ncols())
                .map(|j| Norm::L1.value(a.column(j).as_slice()))
                .fold(0.0, f64::max),
            // vertices ±e_i of the dual (l1) ball; sup over u gives ‖Aᵀ e_i‖_1
            Norm::LInf => (0..a.nrows())
                .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Norm::L2 => {
                let gram = a.transpose() * a;
                let eig = gram.symmetric_eigen();
                eig.eigenvalues.iter().fold(0.0, |m: f64, l| m.max(*l)).max(0.0).sqrt()
            }
        };
        Ok(value)
    }

    /// `‖T_U‖_op` with the primal norm on both sides.
    pub fn primal_operator_norm(&self, spec: &DualPairSpec) -> f64 {
        spec.primal_norm.induced_matrix_norm(&self.matrix)
    }

    /// `‖T_{U⋄}‖_op` with the dual norm on both sides.
    pub fn dual_operator_norm(&self, spec: &DualPairSpec) -> f64 {
        spec.dual_norm().induced_matrix_norm(&self.matrix.transpose())
    }
}
