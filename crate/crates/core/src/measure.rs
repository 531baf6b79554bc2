//! Finitely-atomic vector measures `μ = Σ_k δ_{w_k} c_k`.
//!
//! A payload `c` stores the product `a·u` of a scalar weight and a direction;
//! the extreme-point factorization is recovered on demand by normalizing.

use serde::{Deserialize, Serialize};

use crate::dual_pair::Norm;
use crate::error::{check_dim, Error, Result};
use crate::feature::FeatureMap;
use crate::numeric::{dot, linf_dist, norm2, KahanSum};

/// Default ℓ∞ merge tolerance on atom locations.
pub const MERGE_TOL: f64 = 1e-9;
/// Atoms whose payload norm falls below this are dropped by `coalesce`.
pub const PRUNE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub w: Vec<f64>,
    pub c: Vec<f64>,
}

impl Atom {
    pub fn new(w: Vec<f64>, c: Vec<f64>) -> Self {
        Self { w, c }
    }
}

/// A finite list of atoms with payloads measured in `norm`, located in the
/// Euclidean ball of radius `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicVectorMeasure {
    atoms: Vec<Atom>,
    dim: usize,
    norm: Norm,
    radius: f64,
}

impl AtomicVectorMeasure {
    /// The zero measure with payload dimension `dim`.
    pub fn zero(dim: usize, norm: Norm, radius: f64) -> Self {
        Self {
            atoms: Vec::new(),
            dim,
            norm,
            radius,
        }
    }

    pub fn from_atoms(atoms: Vec<Atom>, dim: usize, norm: Norm, radius: f64) -> Result<Self> {
        let mut mu = Self::zero(dim, norm, radius);
        for a in atoms {
            mu.push(a)?;
        }
        Ok(mu)
    }

    pub fn dirac(w: Vec<f64>, c: Vec<f64>, norm: Norm, radius: f64) -> Result<Self> {
        let dim = c.len();
        Self::from_atoms(vec![Atom::new(w, c)], dim, norm, radius)
    }

    pub fn push(&mut self, atom: Atom) -> Result<()> {
        check_dim("atom payload", self.dim, atom.c.len())?;
        if let Some(first) = self.atoms.first() {
            check_dim("atom location", first.w.len(), atom.w.len())?;
        }
        if atom.w.iter().chain(&atom.c).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("atom entries must be finite".into()));
        }
        let r = norm2(&atom.w);
        if r > self.radius * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "atom location norm {r} exceeds domain radius {}",
                self.radius
            )));
        }
        self.atoms.push(atom);
        Ok(())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<Atom> {
        self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn location_dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.w.len())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for a in &mut out.atoms {
            for c in &mut a.c {
                *c *= alpha;
            }
        }
        out
    }

    /// `alpha·self + other` as an atom list (no coalescing).
    pub fn combine(&self, alpha: f64, other: &Self) -> Result<Self> {
        check_dim("measure payload", self.dim, other.dim)?;
        let mut out = self.scale(alpha);
        out.radius = self.radius.max(other.radius);
        for a in &other.atoms {
            out.push(a.clone())?;
        }
        Ok(out)
    }

    /// Merge atoms whose locations differ by at most `tol` in ℓ∞ (payloads
    /// summed, location of the first occurrence kept) and drop atoms with
    /// payload norm below [`PRUNE_TOL`]. Order of first occurrence is kept.
    pub fn coalesce(&self, tol: f64) -> Self {
        let mut groups: Vec<Atom> = Vec::new();
        for a in &self.atoms {
            match groups.iter_mut().find(|g| linf_dist(&g.w, &a.w) <= tol) {
                Some(g) => {
                    for (gc, ac) in g.c.iter_mut().zip(&a.c) {
                        *gc += ac;
                    }
                }
                None => groups.push(a.clone()),
            }
        }
        groups.retain(|g| self.norm.value(&g.c) >= PRUNE_TOL);
        Self {
            atoms: groups,
            dim: self.dim,
            norm: self.norm,
            radius: self.radius,
        }
    }

    /// `|μ|(Ω) = Σ_k ‖c_k‖` over the atoms coalesced at [`MERGE_TOL`].
    pub fn total_variation(&self) -> f64 {
        self.coalesce(MERGE_TOL)
            .atoms
            .iter()
            .map(|a| self.norm.value(&a.c))
            .collect::<KahanSum>()
            .value()
    }

    /// `Σ_k ‖c_k‖` without coalescing.
    pub fn atomwise_mass(&self) -> f64 {
        self.atoms.iter().map(|a| self.norm.value(&a.c)).sum()
    }

    /// `(A μ)(x) = Σ_m φ(x, w_m) c_m`.
    pub fn integrate(&self, phi: &FeatureMap, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("integration point", phi.input_dim(), x.len())?;
        if let Some(dw) = self.location_dim() {
            check_dim("atom location vs feature weight", phi.weight_dim(), dw)?;
        }
        Ok(self.integrate_unchecked(phi, x))
    }

    pub(crate) fn integrate_unchecked(&self, phi: &FeatureMap, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for a in &self.atoms {
            let p = phi.value(x, &a.w);
            if p != 0.0 {
                for (o, c) in out.iter_mut().zip(&a.c) {
                    *o += p * c;
                }
            }
        }
        out
    }

    /// Adjoint integration for a measure on the input side:
    /// `g(w) = Σ_i φ(x_i, w) c⋄_i`.
    pub fn integrate_adjoint(&self, phi: &FeatureMap, w: &[f64]) -> Result<Vec<f64>> {
        check_dim("adjoint integration point", phi.weight_dim(), w.len())?;
        if let Some(dx) = self.location_dim() {
            check_dim("atom location vs feature input", phi.input_dim(), dx)?;
        }
        let mut out = vec![0.0; self.dim];
        for a in &self.atoms {
            let p = phi.value(&a.w, w);
            for (o, c) in out.iter_mut().zip(&a.c) {
                *o += p * c;
            }
        }
        Ok(out)
    }
}

/// `⟨ρ, μ⟩ = Σ_i Σ_j φ(x_i, w_j) ⟨c⋄_i, c_j⟩`, the atomic form of
/// `∫ φ d⟨ρ, μ⟩`.
pub fn product_pairing(rho: &AtomicVectorMeasure, mu: &AtomicVectorMeasure, phi: &FeatureMap) -> Result<f64> {
    check_dim("product pairing payloads", rho.dim(), mu.dim())?;
    if let Some(dx) = rho.location_dim() {
        check_dim("rho location vs feature input", phi.input_dim(), dx)?;
    }
    if let Some(dw) = mu.location_dim() {
        check_dim("mu location vs feature weight", phi.weight_dim(), dw)?;
    }
    let mut acc = KahanSum::new();
    for r in rho.atoms() {
        for m in mu.atoms() {
            acc.add(phi.value(&r.w, &m.w) * dot(&r.c, &m.c));
        }
    }
    Ok(acc.value())
}

/// `Σ_i Σ_j |φ(x_i, w_j) ⟨c⋄_i, c_j⟩|`, the magnitude scale of
/// [`product_pairing`].
pub fn product_pairing_scale(rho: &AtomicVectorMeasure, mu: &AtomicVectorMeasure, phi: &FeatureMap) -> f64 {
    let mut acc = 0.0;
    for r in rho.atoms() {
        for m in mu.atoms() {
            acc += (phi.value(&r.w, &m.w) * dot(&r.c, &m.c)).abs();
        }
    }
    acc
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<Atom>,
    norm: Norm,
    radius: f64,
}

impl Serialize for AtomicVectorMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRepr {
            atoms: self.atoms.clone(),
            norm: self.norm,
            radius: self.radius,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicVectorMeasure {
    /// The payload dimension is taken from the atoms (0 for an empty
    /// measure; rebind with [`AtomicVectorMeasure::with_dim`]).
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MeasureRepr::deserialize(d)?;
        let dim = r.atoms.first().map_or(0, |a| a.c.len());
        AtomicVectorMeasure::from_atoms(r.atoms, dim, r.norm, r.radius).map_err(serde::de::Error::custom)
    }
}

impl AtomicVectorMeasure {
    /// Rebind the payload dimension of an empty measure, or check it.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if self.atoms.is_empty() {
            self.dim = dim;
            Ok(self)
        } else {
            check_dim("measure payload", dim, self.dim)?;
            Ok(self)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::{Activation, Beta, FeatureKind, Table};
    use approx::assert_abs_diff_eq;

    fn constant_feature(value: f64) -> FeatureMap {
        let table = Table {
            x_range: [-1.0, 1.0],
            w_range: [-1.0, 1.0],
            values: vec![vec![value, value], vec![value, value]],
        };
        FeatureMap::new(FeatureKind::Tabulated(table), 1, 1.0, Beta::One).unwrap()
    }

    #[test]
    fn total_variation_examples() {
        let mu = AtomicVectorMeasure::from_atoms(
            vec![Atom::new(vec![0.1], vec![2.0, 0.0]), Atom::new(vec![0.2], vec![0.0, -3.0])],
            2,
            Norm::L2,
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(mu.total_variation(), 5.0);
        let same = AtomicVectorMeasure::from_atoms(
            vec![Atom::new(vec![0.1], vec![1.0, 0.0]), Atom::new(vec![0.1], vec![0.0, 1.0])],
            2,
            Norm::L2,
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(same.total_variation(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(AtomicVectorMeasure::zero(3, Norm::L1, 1.0).total_variation(), 0.0);
    }

    #[test]
    fn split_atom_keeps_total_variation() {
        let one = AtomicVectorMeasure::dirac(vec![0.3, -0.2], vec![1.0, -2.0, 0.5], Norm::L1, 1.0).unwrap();
        let split = AtomicVectorMeasure::from_atoms(
            vec![
                Atom::new(vec![0.3, -0.2], vec![0.25, -0.5, 0.125]),
                Atom::new(vec![0.3, -0.2], vec![0.75, -1.5, 0.375]),
            ],
            3,
            Norm::L1,
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(one.total_variation(), split.total_variation(), epsilon = 1e-15);
    }

    #[test]
    fn integrate_examples() {
        let half = constant_feature(0.5);
        let mu = AtomicVectorMeasure::dirac(vec![0.2], vec![2.0, -4.0], Norm::L2, 1.0).unwrap();
        assert_eq!(mu.integrate(&half, &[0.1]).unwrap(), vec![1.0, -2.0]);
        let zero = AtomicVectorMeasure::zero(2, Norm::L2, 1.0);
        assert_eq!(zero.integrate(&half, &[0.1]).unwrap(), vec![0.0, 0.0]);
        // φ = ±1 on the two atoms
        let table = Table {
            x_range: [-1.0, 1.0],
            w_range: [-1.0, 1.0],
            values: vec![vec![-1.0, 1.0], vec![-1.0, 1.0]],
        };
        let pm = FeatureMap::tabulated(table, 1.0, Beta::One).unwrap();
        let cancel = AtomicVectorMeasure::from_atoms(
            vec![Atom::new(vec![-1.0], vec![3.0, 1.0]), Atom::new(vec![1.0], vec![3.0, 1.0])],
            2,
            Norm::L2,
            1.0,
        )
        .unwrap();
        assert_eq!(cancel.integrate(&pm, &[0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(mu.integrate(&half, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn pairing_examples() {
        let f = FeatureMap::neural(Activation::Tanh, 1, 2.0, Beta::SmoothBump).unwrap();
        let rho = AtomicVectorMeasure::dirac(vec![0.4], vec![1.0, 2.0], Norm::L2, 1.0).unwrap();
        let mu = AtomicVectorMeasure::dirac(vec![0.5, 0.1], vec![-1.0, 3.0], Norm::L2, 2.0).unwrap();
        let expect = f.value(&[0.4], &[0.5, 0.1]) * 5.0;
        assert_abs_diff_eq!(product_pairing(&rho, &mu, &f).unwrap(), expect, epsilon = 1e-15);
        let zero = AtomicVectorMeasure::zero(2, Norm::L2, 2.0);
        assert_eq!(product_pairing(&rho, &zero, &f).unwrap(), 0.0);
        let orth = AtomicVectorMeasure::dirac(vec![0.5, 0.1], vec![2.0, -1.0], Norm::L2, 2.0).unwrap();
        assert_eq!(product_pairing(&rho, &orth, &f).unwrap(), 0.0);
        let wrong = AtomicVectorMeasure::dirac(vec![0.5, 0.1], vec![1.0], Norm::L2, 2.0).unwrap();
        assert!(product_pairing(&rho, &wrong, &f).is_err());
    }

    #[test]
    fn coalesce_examples() {
        let mu = AtomicVectorMeasure::from_atoms(
            vec![Atom::new(vec![0.1], vec![1.0, 0.0]), Atom::new(vec![0.1], vec![0.0, 1.0])],
            2,
            Norm::L2,
            1.0,
        )
        .unwrap();
        assert_eq!(mu.coalesce(0.0).atoms(), &[Atom::new(vec![0.1], vec![1.0, 1.0])]);
        let annihilate = AtomicVectorMeasure::from_atoms(
            vec![Atom::new(vec![0.1], vec![1.0, -2.0]), Atom::new(vec![0.1], vec![-1.0, 2.0])],
            2,
            Norm::L2,
            1.0,
        )
        .unwrap();
        assert!(annihilate.coalesce(0.0).is_empty());
        let distinct = AtomicVectorMeasure::from_atoms(
            vec![Atom::new(vec![0.1], vec![1.0, 0.0]), Atom::new(vec![0.1 + 1e-12], vec![0.0, 1.0])],
            2,
            Norm::L2,
            1.0,
        )
        .unwrap();
        assert_eq!(distinct.coalesce(0.0), distinct);
        assert_eq!(distinct.coalesce(MERGE_TOL).len(), 1);
    }

    #[test]
    fn rejects_atoms_outside_radius() {
        assert!(AtomicVectorMeasure::dirac(vec![2.0, 0.0], vec![1.0], Norm::L2, 1.0).is_err());
        let mut mu = AtomicVectorMeasure::zero(2, Norm::L2, 1.0);
        assert!(mu.push(Atom::new(vec![0.0], vec![1.0])).is_err());
    }

    #[test]
    fn json_shape() {
        let mu = AtomicVectorMeasure::dirac(vec![0.5, -0.25], vec![1.0, 2.0], Norm::L2, 3.0).unwrap();
        let s = serde_json::to_string(&mu).unwrap();
        assert_eq!(s, r#"{"atoms":[{"w":[0.5,-0.25],"c":[1.0,2.0]}],"norm":"l2","radius":3.0}"#);
        let back: AtomicVectorMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, mu);
        let empty: AtomicVectorMeasure = serde_json::from_str(r#"{"atoms":[],"norm":"l1","radius":1.0}"#).unwrap();
        assert_eq!(empty.with_dim(3).unwrap().dim(), 3);
    }
}
