//! Scalar features `φ ∈ C0(X × Ω)` and the integral-RKBS kernel built on them.
//!
//! The neural feature is `φ(x, (ω, b)) = σ(⟨ω, x⟩ + b) β(ω, b)`; the weight
//! space `Ω` is the Euclidean ball of radius `R` and the truncation `β`
//! pushes the feature to zero at its boundary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dual_pair::{DualPairSpec, TwinOperator};
use crate::error::{check_dim, Error, Result};
use crate::measure::AtomicVectorMeasure;
use crate::numeric::{cartesian, dot, linspace, KahanSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    GaussianRbf,
}

impl Activation {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Activation::Relu => t.max(0.0),
            Activation::Tanh => t.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-t).exp()),
            Activation::GaussianRbf => (-0.5 * t * t).exp(),
        }
    }

    /// Derivative; the ReLU kink takes the subgradient value 0.
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            Activation::Relu => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let th = t.tanh();
                1.0 - th * th
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-t).exp());
                s * (1.0 - s)
            }
            Activation::GaussianRbf => -t * (-0.5 * t * t).exp(),
        }
    }

    pub fn is_bounded(self) -> bool {
        !matches!(self, Activation::Relu)
    }

    /// `sup_{|t| ≤ t_max} |σ(t)|`.
    fn sup_abs(self, t_max: f64) -> f64 {
        match self {
            Activation::Relu => t_max,
            Activation::Tanh => t_max.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-t_max).exp()),
            Activation::GaussianRbf => 1.0,
        }
    }
}

/// Truncation factor applied to the weight coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beta {
    /// `max(0, 1 - (‖w‖/R)²)²`, continuously differentiable.
    #[default]
    SmoothBump,
    /// Indicator of `‖w‖ ≤ R`.
    Hard,
    One,
}

impl Beta {
    pub fn eval(self, w: &[f64], radius: f64) -> f64 {
        let r2 = dot(w, w);
        match self {
            Beta::SmoothBump => {
                let s = 1.0 - r2 / (radius * radius);
                if s > 0.0 {
                    s * s
                } else {
                    0.0
                }
            }
            Beta::Hard => {
                if r2 <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            Beta::One => 1.0,
        }
    }

    fn grad(self, w: &[f64], radius: f64) -> Vec<f64> {
        match self {
            Beta::SmoothBump => {
                let s = 1.0 - dot(w, w) / (radius * radius);
                if s > 0.0 {
                    let k = -4.0 * s / (radius * radius);
                    w.iter().map(|v| k * v).collect()
                } else {
                    vec![0.0; w.len()]
                }
            }
            Beta::Hard | Beta::One => vec![0.0; w.len()],
        }
    }

    pub fn truncates(self) -> bool {
        !matches!(self, Beta::One)
    }
}

/// Bilinearly interpolated feature on `[x_lo, x_hi] × [w_lo, w_hi]`;
/// `values[i][j]` sits at the `i`-th x node and `j`-th w node. Coordinates
/// outside the box are clamped to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub x_range: [f64; 2],
    pub w_range: [f64; 2],
    pub values: Vec<Vec<f64>>,
}

impl Table {
    fn validate(&self) -> Result<()> {
        let nx = self.values.len();
        let nw = self.values.first().map_or(0, Vec::len);
        if nx < 2 || nw < 2 {
            return Err(Error::InvalidArgument("tabulated feature needs at least 2x2 values".into()));
        }
        if self.values.iter().any(|r| r.len() != nw) {
            return Err(Error::InvalidArgument("tabulated feature rows must have equal length".into()));
        }
        let increasing = |r: &[f64; 2]| r[0].partial_cmp(&r[1]) == Some(std::cmp::Ordering::Less);
        if !increasing(&self.x_range) || !increasing(&self.w_range) {
            return Err(Error::InvalidArgument("tabulated ranges must be increasing".into()));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("tabulated values must be finite".into()));
        }
        Ok(())
    }

    /// Cell index and fractional offset along one axis.
    fn locate(range: [f64; 2], n: usize, t: f64) -> (usize, f64, bool) {
        let h = (range[1] - range[0]) / (n - 1) as f64;
        let clamped = t < range[0] || t > range[1];
        let s = ((t.clamp(range[0], range[1]) - range[0]) / h).min((n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64, clamped)
    }

    /// Column of values interpolated at `w`, one entry per x node.
    fn column(&self, w: f64) -> Vec<f64> {
        let nw = self.values[0].len();
        let (j, tw, _) = Self::locate(self.w_range, nw, w);
        self.values
            .iter()
            .map(|row| (1.0 - tw) * row[j] + tw * row[j + 1])
            .collect()
    }

    fn eval(&self, x: f64, w: f64) -> f64 {
        let nx = self.values.len();
        let col = self.column(w);
        let (i, tx, _) = Self::locate(self.x_range, nx, x);
        (1.0 - tx) * col[i] + tx * col[i + 1]
    }

    fn dw(&self, x: f64, w: f64) -> f64 {
        let nx = self.values.len();
        let nw = self.values[0].len();
        let (j, _, clamped) = Self::locate(self.w_range, nw, w);
        if clamped {
            return 0.0;
        }
        let hw = (self.w_range[1] - self.w_range[0]) / (nw - 1) as f64;
        let (i, tx, _) = Self::locate(self.x_range, nx, x);
        let v = &self.values;
        ((1.0 - tx) * (v[i][j + 1] - v[i][j]) + tx * (v[i + 1][j + 1] - v[i + 1][j])) / hw
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKind {
    Neural { activation: Activation },
    Gaussian { bandwidth: f64 },
    Tabulated(Table),
}

/// An evaluable feature `φ : X × Ω → R` with `Ω = {w : ‖w‖₂ ≤ radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureRepr", into = "FeatureRepr")]
pub struct FeatureMap {
    kind: FeatureKind,
    input_dim: usize,
    radius: f64,
    beta: Beta,
}

/// Default bandwidth of the Gaussian feature.
pub const DEFAULT_BANDWIDTH: f64 = 1.0;

impl FeatureMap {
    pub fn neural(activation: Activation, input_dim: usize, radius: f64, beta: Beta) -> Result<Self> {
        Self::new(FeatureKind::Neural { activation }, input_dim, radius, beta)
    }

    pub fn gaussian(bandwidth: f64, input_dim: usize, radius: f64, beta: Beta) -> Result<Self> {
        Self::new(FeatureKind::Gaussian { bandwidth }, input_dim, radius, beta)
    }

    pub fn tabulated(table: Table, radius: f64, beta: Beta) -> Result<Self> {
        Self::new(FeatureKind::Tabulated(table), 1, radius, beta)
    }

    pub fn new(kind: FeatureKind, input_dim: usize, radius: f64, beta: Beta) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArgument("feature input dimension must be positive".into()));
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidArgument(format!("feature radius must be positive, got {radius}")));
        }
        match &kind {
            FeatureKind::Gaussian { bandwidth } if bandwidth.is_nan() || *bandwidth <= 0.0 => {
                return Err(Error::InvalidArgument("gaussian bandwidth must be positive".into()));
            }
            FeatureKind::Tabulated(t) => {
                if input_dim != 1 {
                    return Err(Error::InvalidArgument("tabulated features are one-dimensional".into()));
                }
                t.validate()?;
            }
            _ => {}
        }
        Ok(Self {
            kind,
            input_dim,
            radius,
            beta,
        })
    }

    pub fn kind(&self) -> &FeatureKind {
        &self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Dimension of the weight coordinate (`dx + 1` for neural features).
    pub fn weight_dim(&self) -> usize {
        match self.kind {
            FeatureKind::Neural { .. } => self.input_dim + 1,
            FeatureKind::Gaussian { .. } => self.input_dim,
            FeatureKind::Tabulated(_) => 1,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn activation(&self) -> Option<Activation> {
        match self.kind {
            FeatureKind::Neural { activation } => Some(activation),
            _ => None,
        }
    }

    /// Whether `φ` is bounded and vanishes at the boundary of the weight
    /// ball, i.e. the combination is admissible as a `C0` feature on
    /// unbounded input domains.
    pub fn is_c0(&self) -> bool {
        match self.kind {
            FeatureKind::Neural { activation } => self.beta.truncates() || activation.is_bounded(),
            _ => true,
        }
    }

    /// Checked evaluation of `φ(x, w)`.
    pub fn eval_phi(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        check_dim("feature input", self.input_dim, x.len())?;
        check_dim("feature weight", self.weight_dim(), w.len())?;
        Ok(self.value(x, w))
    }

    /// Unchecked evaluation; slices must have the feature's dimensions.
    pub fn value(&self, x: &[f64], w: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.input_dim);
        debug_assert_eq!(w.len(), self.weight_dim());
        let beta = self.beta.eval(w, self.radius);
        if beta == 0.0 {
            return 0.0;
        }
        self.core(x, w) * beta
    }

    /// The feature without its truncation factor.
    fn core(&self, x: &[f64], w: &[f64]) -> f64 {
        match &self.kind {
            FeatureKind::Neural { activation } => {
                let (omega, b) = w.split_at(self.input_dim);
                activation.eval(dot(omega, x) + b[0])
            }
            FeatureKind::Gaussian { bandwidth } => {
                let d2: f64 = x.iter().zip(w).map(|(a, c)| (a - c) * (a - c)).sum();
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            FeatureKind::Tabulated(t) => t.eval(x[0], w[0]),
        }
    }

    fn core_grad_w(&self, x: &[f64], w: &[f64]) -> Vec<f64> {
        match &self.kind {
            FeatureKind::Neural { activation } => {
                let (omega, b) = w.split_at(self.input_dim);
                let ds = activation.derivative(dot(omega, x) + b[0]);
                let mut g: Vec<f64> = x.iter().map(|v| v * ds).collect();
                g.push(ds);
                g
            }
            FeatureKind::Gaussian { bandwidth } => {
                let s2 = bandwidth * bandwidth;
                let d2: f64 = x.iter().zip(w).map(|(a, c)| (a - c) * (a - c)).sum();
                let k = (-d2 / (2.0 * s2)).exp();
                x.iter().zip(w).map(|(a, c)| k * (a - c) / s2).collect()
            }
            FeatureKind::Tabulated(t) => vec![t.dw(x[0], w[0])],
        }
    }

    /// `∇_w φ(x, w)` by the product rule.
    pub fn grad_phi_w(&self, x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        check_dim("feature input", self.input_dim, x.len())?;
        check_dim("feature weight", self.weight_dim(), w.len())?;
        Ok(self.grad_w(x, w))
    }

    /// Unchecked gradient in `w`.
    pub fn grad_w(&self, x: &[f64], w: &[f64]) -> Vec<f64> {
        let beta = self.beta.eval(w, self.radius);
        if beta == 0.0 {
            return vec![0.0; w.len()];
        }
        let core = self.core(x, w);
        let dcore = self.core_grad_w(x, w);
        let dbeta = self.beta.grad(w, self.radius);
        dcore
            .iter()
            .zip(&dbeta)
            .map(|(dc, db)| dc * beta + core * db)
            .collect()
    }

    /// Upper bound on `sup_{‖w‖ ≤ R} |φ(x, w)|`, exact for `β ≡ 1` neural
    /// features with monotone activations.
    pub fn sup_abs_bound(&self, x: &[f64]) -> f64 {
        match &self.kind {
            FeatureKind::Neural { activation } => {
                let t_max = self.radius * (dot(x, x) + 1.0).sqrt();
                activation.sup_abs(t_max)
            }
            FeatureKind::Gaussian { .. } => 1.0,
            FeatureKind::Tabulated(t) => t.max_abs(),
        }
    }

    /// Grid estimate of `sup_{‖w‖ ≤ R} |φ(x, w)|` (a lower estimate).
    pub fn sup_abs_grid(&self, x: &[f64], per_dim: usize) -> f64 {
        self.weight_grid(per_dim)
            .iter()
            .map(|w| self.value(x, w).abs())
            .fold(0.0, f64::max)
    }

    /// Nodes of the `per_dim`-point tensor grid on `[-R, R]^dw` that lie in
    /// the weight ball.
    pub fn weight_grid(&self, per_dim: usize) -> Vec<Vec<f64>> {
        let axis = linspace(-self.radius, self.radius, per_dim);
        let axes = vec![axis; self.weight_dim()];
        let r2 = self.radius * self.radius * (1.0 + 1e-12);
        cartesian(&axes).into_iter().filter(|w| dot(w, w) <= r2).collect()
    }

    /// Whether `φ(·, w)` is identically zero on `X`, decided exactly.
    pub fn vanishes_identically(&self, w: &[f64]) -> bool {
        if self.beta.eval(w, self.radius) == 0.0 {
            return true;
        }
        match &self.kind {
            FeatureKind::Neural { activation } => {
                let (omega, b) = w.split_at(self.input_dim);
                omega.iter().all(|v| *v == 0.0) && activation.eval(b[0]) == 0.0
            }
            FeatureKind::Gaussian { .. } => false,
            FeatureKind::Tabulated(t) => t.column(w[0]).iter().all(|v| *v == 0.0),
        }
    }

    /// A scale `s` with `φ(·, w2) ≡ s · φ(·, w1)` as functions on `X`, when
    /// one follows exactly from the structure of the feature.
    ///
    /// Covers identical weights, the symmetry `σ(-t) = ±σ(t)` of even/odd
    /// activations under the radial truncation, and proportional columns
    /// of a tabulated feature.
    pub fn equivalent_scale(&self, w1: &[f64], w2: &[f64]) -> Option<f64> {
        if w1 == w2 {
            return Some(1.0);
        }
        if self.vanishes_identically(w1) {
            return None;
        }
        if self.vanishes_identically(w2) {
            return Some(0.0);
        }
        match &self.kind {
            FeatureKind::Neural { activation } => {
                let negated = w1.iter().zip(w2).all(|(a, b)| *a == -b);
                match (negated, activation) {
                    (true, Activation::GaussianRbf) => Some(1.0),
                    (true, Activation::Tanh) => Some(-1.0),
                    _ => None,
                }
            }
            FeatureKind::Gaussian { .. } => None,
            FeatureKind::Tabulated(t) => {
                let b1 = self.beta.eval(w1, self.radius);
                let b2 = self.beta.eval(w2, self.radius);
                let c1: Vec<f64> = t.column(w1[0]).iter().map(|v| v * b1).collect();
                let c2: Vec<f64> = t.column(w2[0]).iter().map(|v| v * b2).collect();
                let (k, pivot) = c1
                    .iter()
                    .enumerate()
                    .fold((0, 0.0_f64), |(bi, bv), (i, v)| if v.abs() > bv.abs() { (i, *v) } else { (bi, bv) });
                let s = c2[k] / pivot;
                c1.iter().zip(&c2).all(|(a, b)| s * a == *b).then_some(s)
            }
        }
    }

    /// Kernel value `K(x, w)` as a scalar multiple of the identity.
    pub fn kernel_value(&self, x: &[f64], w: &[f64]) -> Result<KernelValue> {
        Ok(KernelValue {
            phi_value: self.eval_phi(x, w)?,
        })
    }
}

/// `K(x, w)(u⋄, u) = φ(x, w) ⟨u⋄, u⟩`.
pub fn kernel(
    feature: &FeatureMap,
    spec: &DualPairSpec,
    x: &[f64],
    w: &[f64],
    u_dual: &[f64],
    u: &[f64],
) -> Result<f64> {
    let k = feature.kernel_value(x, w)?;
    Ok(k.phi_value * spec.pair(u_dual, u)?)
}

/// Kernel value of the integral RKBS: `K_U(x, w) = φ(x, w) Id` and
/// `K_{U⋄}(x, w) = φ(x, w) Id`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub phi_value: f64,
}

impl KernelValue {
    pub fn apply_primal(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|v| self.phi_value * v).collect()
    }

    pub fn apply_dual(&self, u_dual: &[f64]) -> Vec<f64> {
        u_dual.iter().map(|v| self.phi_value * v).collect()
    }

    pub fn form(&self, spec: &DualPairSpec, u_dual: &[f64], u: &[f64]) -> Result<f64> {
        Ok(self.phi_value * spec.pair(u_dual, u)?)
    }

    pub fn as_twin(&self, dim: usize) -> TwinOperator {
        TwinOperator::scaled_identity(dim, self.phi_value)
    }
}

/// An axis-aligned box `∏ [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim("box bounds", lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(a, b)| a.partial_cmp(b) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::InvalidArgument("box bounds must satisfy lo < hi".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Multi-index of the cell containing `p`; the upper face belongs to the
    /// last cell.
    fn cell_of(&self, p: &[f64], per_dim: usize) -> Option<Vec<usize>> {
        if p.len() != self.dim() {
            return None;
        }
        let mut idx = Vec::with_capacity(p.len());
        for ((&v, &lo), &hi) in p.iter().zip(&self.lo).zip(&self.hi) {
            if !(v >= lo && v <= hi) {
                return None;
            }
            let s = ((v - lo) / (hi - lo) * per_dim as f64).floor() as usize;
            idx.push(s.min(per_dim - 1));
        }
        Some(idx)
    }

    fn cell_center(&self, idx: &[usize], per_dim: usize) -> Vec<f64> {
        idx.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&i, (&lo, &hi))| lo + (hi - lo) * (i as f64 + 0.5) / per_dim as f64)
            .collect()
    }
}

/// Sum the payloads of a measure per grid cell.
fn bin_measure(
    mu: &AtomicVectorMeasure,
    domain: &BoxDomain,
    per_dim: usize,
    what: &str,
) -> Result<BTreeMap<Vec<usize>, Vec<f64>>> {
    let mut cells: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    for atom in mu.atoms() {
        let idx = domain.cell_of(&atom.w, per_dim).ok_or_else(|| {
            Error::InvalidArgument(format!("{what} atom at {:?} lies outside the bounding box", atom.w))
        })?;
        let slot = cells.entry(idx).or_insert_with(|| vec![0.0; atom.c.len()]);
        for (s, c) in slot.iter_mut().zip(&atom.c) {
            *s += c;
        }
    }
    Ok(cells)
}

/// Pairing `⟨g, f⟩` evaluated with `φ` replaced by the simple function that
/// is constant on each product cell (value at the cell center):
/// `Σ_{A, B} φ(center_A, center_B) ⟨ρ(A), μ(B)⟩`.
pub fn simple_approx_pairing(
    feature: &FeatureMap,
    rho: &AtomicVectorMeasure,
    mu: &AtomicVectorMeasure,
    x_box: &BoxDomain,
    w_box: &BoxDomain,
    grid_per_dim: usize,
) -> Result<f64> {
    if grid_per_dim == 0 {
        return Err(Error::InvalidArgument("grid_per_dim must be at least 1".into()));
    }
    check_dim("x bounding box", feature.input_dim(), x_box.dim())?;
    check_dim("w bounding box", feature.weight_dim(), w_box.dim())?;
    if !rho.is_empty() && !mu.is_empty() {
        check_dim("payload dimension", rho.dim(), mu.dim())?;
    }
    let rho_cells = bin_measure(rho, x_box, grid_per_dim, "rho")?;
    let mu_cells = bin_measure(mu, w_box, grid_per_dim, "mu")?;
    let mut acc = KahanSum::new();
    for (ix, cr) in &rho_cells {
        let xc = x_box.cell_center(ix, grid_per_dim);
        for (iw, cm) in &mu_cells {
            let wc = w_box.cell_center(iw, grid_per_dim);
            acc.add(feature.value(&xc, &wc) * dot(cr, cm));
        }
    }
    Ok(acc.value())
}

/// Sup deviation of the cell-center simple function from `φ`, probed on a
/// grid `refine` times finer than the approximation grid.
pub fn simple_approx_deviation(
    feature: &FeatureMap,
    x_box: &BoxDomain,
    w_box: &BoxDomain,
    grid_per_dim: usize,
    refine: usize,
) -> f64 {
    let probe = grid_per_dim * refine.max(1);
    let axes = |b: &BoxDomain| -> Vec<Vec<f64>> {
        b.lo.iter()
            .zip(&b.hi)
            .map(|(&lo, &hi)| (0..probe).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / probe as f64).collect())
            .collect()
    };
    let xs = cartesian(&axes(x_box));
    let ws = cartesian(&axes(w_box));
    let mut worst = 0.0_f64;
    for x in &xs {
        let xc = x_box.cell_center(&x_box.cell_of(x, grid_per_dim).expect("probe inside box"), grid_per_dim);
        for w in &ws {
            let wc = w_box.cell_center(&w_box.cell_of(w, grid_per_dim).expect("probe inside box"), grid_per_dim);
            worst = worst.max((feature.value(x, w) - feature.value(&xc, &wc)).abs());
        }
    }
    worst
}

#[derive(Serialize, Deserialize)]
struct FeatureRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    activation: Option<Activation>,
    dx: usize,
    radius: f64,
    #[serde(default)]
    beta: Beta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Table>,
}

impl TryFrom<FeatureRepr> for FeatureMap {
    type Error = Error;

    fn try_from(r: FeatureRepr) -> Result<Self> {
        let kind = match r.kind.as_str() {
            "neural" => FeatureKind::Neural {
                activation: r
                    .activation
                    .ok_or_else(|| Error::InvalidArgument("neural feature requires 'activation'".into()))?,
            },
            "gaussian" => FeatureKind::Gaussian {
                bandwidth: r.bandwidth.unwrap_or(DEFAULT_BANDWIDTH),
            },
            "tabulated" => FeatureKind::Tabulated(
                r.table
                    .ok_or_else(|| Error::InvalidArgument("tabulated feature requires 'table'".into()))?,
            ),
            other => return Err(Error::InvalidArgument(format!("unknown feature kind '{other}'"))),
        };
        FeatureMap::new(kind, r.dx, r.radius, r.beta)
    }
}

impl From<FeatureMap> for FeatureRepr {
    fn from(f: FeatureMap) -> Self {
        let (kind, activation, bandwidth, table) = match f.kind {
            FeatureKind::Neural { activation } => ("neural", Some(activation), None, None),
            FeatureKind::Gaussian { bandwidth } => ("gaussian", None, Some(bandwidth), None),
            FeatureKind::Tabulated(t) => ("tabulated", None, None, Some(t)),
        };
        FeatureRepr {
            kind: kind.to_string(),
            activation,
            dx: f.input_dim,
            radius: f.radius,
            beta: f.beta,
            bandwidth,
            table,
        }
    }
}
