//! Small numeric helpers shared across modules.

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn linf_dist(a: &[f64], b: &[f64]) -> f64 {
    max_abs_diff(a, b)
}

/// Relative discrepancy `|a - b| / max(|a|, |b|, scale)`.
///
/// `scale` is the magnitude of the computation that produced the values
/// (typically the sum of absolute terms), so cancellation down to zero does
/// not blow the ratio up. Returns 0 when both sides and the scale vanish.
pub fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(scale.abs());
    let diff = (a - b).abs();
    if diff == 0.0 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        diff / denom
    }
}

/// Vector version of [`rel_err`] using the sup norm.
pub fn rel_err_vec(a: &[f64], b: &[f64], scale: f64) -> f64 {
    let amax = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let bmax = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    rel_err_from(max_abs_diff(a, b), amax.max(bmax).max(scale))
}

fn rel_err_from(diff: f64, denom: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        diff / denom
    }
}

/// `n` equispaced nodes on `[lo, hi]`; a single node sits at the midpoint.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Cartesian product of per-axis node lists, last axis fastest.
pub fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-15).abs() < 1e-27);
    }

    #[test]
    fn rel_err_zero_cases() {
        assert_eq!(rel_err(0.0, 0.0, 0.0), 0.0);
        assert_eq!(rel_err(1.0, 1.0, 0.0), 0.0);
        assert!((rel_err(1.0, 1.1, 0.0) - 0.1 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn cartesian_orders_last_axis_fastest() {
        let pts = cartesian(&[vec![0.0, 1.0], vec![2.0, 3.0]]);
        assert_eq!(
            pts,
            vec![
                vec![0.0, 2.0],
                vec![0.0, 3.0],
                vec![1.0, 2.0],
                vec![1.0, 3.0]
            ]
        );
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(-1.0, 1.0, 3), vec![-1.0, 0.0, 1.0]);
        assert_eq!(linspace(-1.0, 1.0, 1), vec![0.0]);
    }
}
