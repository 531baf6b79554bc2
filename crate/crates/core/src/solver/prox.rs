//! Proximal maps of the payload norms.

use crate::dual_pair::Norm;

/// `argmin_z ½‖z − v‖₂² + τ‖z‖`.
pub fn prox_norm(norm: Norm, v: &[f64], tau: f64) -> Vec<f64> {
    match norm {
        Norm::L1 => v.iter().map(|&x| soft_threshold(x, tau)).collect(),
        Norm::L2 => {
            let n = norm.value(v);
            if n <= tau {
                vec![0.0; v.len()]
            } else {
                let k = 1.0 - tau / n;
                v.iter().map(|x| k * x).collect()
            }
        }
        // Moreau: prox_{τ‖·‖∞}(v) = v − Π_{τ B₁}(v)
        Norm::LInf => {
            let p = project_l1_ball(v, tau);
            v.iter().zip(&p).map(|(a, b)| a - b).collect()
        }
    }
}

pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Euclidean projection onto `{z : ‖z‖₁ ≤ radius}` (sort-based).
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    if Norm::L1.value(v) <= radius {
        return v.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - radius) / (k + 1) as f64;
        if *m > t {
            theta = t;
        }
    }
    v.iter().map(|&x| soft_threshold(x, theta)).collect()
}
