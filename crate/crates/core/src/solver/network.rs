//! Shallow-network view `x ↦ U σ(W x + B)` of a neural-feature measure.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::feature::{Activation, FeatureMap};
use crate::measure::AtomicVectorMeasure;
use crate::numeric::dot;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkDescription {
    #[serde(skip)]
    pub activation: Activation,
    /// `d × m`; column `m` is `β(w_m) c_m`.
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    /// `m × dx`; row `m` is `ω_m`.
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    /// Biases `b_m`.
    #[serde(rename = "B")]
    pub b: Vec<f64>,
}

impl NetworkDescription {
    pub fn hidden_units(&self) -> usize {
        self.b.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(row) = self.w.first() {
            check_dim("network input", row.len(), x.len())?;
        }
        let hidden: Vec<f64> = self
            .w
            .iter()
            .zip(&self.b)
            .map(|(row, b)| self.activation.eval(dot(row, x) + b))
            .collect();
        Ok(self.u.iter().map(|urow| dot(urow, &hidden)).collect())
    }
}

/// Export the atoms of `measure` as hidden units, absorbing the truncation
/// factor `β(w_m)` into the output weights.
pub fn export_network(measure: &AtomicVectorMeasure, feature: &FeatureMap) -> Result<NetworkDescription> {
    let Some(activation) = feature.activation() else {
        return Err(Error::Unsupported("network export needs a neural feature".into()));
    };
    if let Some(dw) = measure.location_dim() {
        check_dim("atom location vs feature weight", feature.weight_dim(), dw)?;
    }
    let dx = feature.input_dim();
    let mut u = vec![Vec::with_capacity(measure.len()); measure.dim()];
    let mut w = Vec::with_capacity(measure.len());
    let mut b = Vec::with_capacity(measure.len());
    for atom in measure.atoms() {
        let beta = feature.beta().eval(&atom.w, feature.radius());
        for (row, c) in u.iter_mut().zip(&atom.c) {
            row.push(beta * c);
        }
        w.push(atom.w[..dx].to_vec());
        b.push(atom.w[dx]);
    }
    Ok(NetworkDescription { activation, u, w, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual_pair::Norm;
    use crate::feature::Beta;
    use crate::measure::Atom;

    #[test]
    fn empty_measure_gives_empty_hidden_layer() {
        let f = FeatureMap::neural(Activation::Relu, 2, 1.0, Beta::One).unwrap();
        let net = export_network(&AtomicVectorMeasure::zero(3, Norm::L2, 1.0), &f).unwrap();
        assert_eq!(net.hidden_units(), 0);
        assert_eq!(net.evaluate(&[0.3, 0.4]).unwrap(), vec![0.0; 3]);
        assert_eq!(
            serde_json::to_string(&net).unwrap(),
            r#"{"U":[[],[],[]],"W":[],"B":[]}"#
        );
    }

    #[test]
    fn single_unit_reproduces_phi_times_c() {
        let f = FeatureMap::neural(Activation::Tanh, 1, 2.0, Beta::SmoothBump).unwrap();
        let mu = AtomicVectorMeasure::dirac(vec![0.5, -0.25], vec![2.0, -1.0], Norm::L1, 2.0).unwrap();
        let net = export_network(&mu, &f).unwrap();
        let x = [0.7];
        let want = mu.integrate(&f, &x).unwrap();
        let got = net.evaluate(&x).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn non_neural_feature_is_unsupported() {
        let f = FeatureMap::gaussian(1.0, 1, 1.0, Beta::One).unwrap();
        let mu = AtomicVectorMeasure::from_atoms(vec![Atom::new(vec![0.1], vec![1.0])], 1, Norm::L1, 1.0).unwrap();
        assert!(matches!(export_network(&mu, &f), Err(Error::Unsupported(_))));
    }
}
