use nalgebra::DMatrix;
use proptest::prelude::*;
use vvrkbs::{DualPairSpec, Norm, TwinOperator};

fn norm_strategy() -> impl Strategy<Value = Norm> {
    prop_oneof![Just(Norm::L1), Just(Norm::L2), Just(Norm::LInf)]
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0_f64, n)
}

/// `(dim, primal norm, u⋄, u)`.
fn pair_inputs() -> impl Strategy<Value = (usize, Norm, Vec<f64>, Vec<f64>)> {
    (1usize..=6, norm_strategy()).prop_flat_map(|(n, norm)| (Just(n), Just(norm), vector(n), vector(n)))
}

fn square(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(vector(n), n)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖·‖_p` written out independently of the crate.
fn lp(norm: Norm, v: &[f64]) -> f64 {
    match norm {
        Norm::L1 => v.iter().map(|x| x.abs()).sum(),
        Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        Norm::LInf => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
    }
}

proptest! {
    #[test]
    fn pairing_is_bounded_by_the_norm_product((n, norm, ud, u) in pair_inputs()) {
        let spec = DualPairSpec::new(n, norm).unwrap();
        let lhs = spec.pair(&ud, &u).unwrap().abs();
        let bound = spec.dual_norm_value(&ud).unwrap() * spec.primal_norm_value(&u).unwrap();
        prop_assert!(lhs <= bound * (1.0 + 1e-12) + 1e-300, "{lhs} > {bound}");
        prop_assert_eq!(spec.pairing_constant(), 1.0);
        prop_assert!((spec.dual_norm_value(&ud).unwrap() - lp(norm.conjugate(), &ud)).abs() <= 1e-12 * lp(norm.conjugate(), &ud));
    }

    #[test]
    fn dual_witness_norms_the_vector((n, norm, _ud, u) in pair_inputs()) {
        prop_assume!(u.iter().any(|&x| x != 0.0));
        let spec = DualPairSpec::new(n, norm).unwrap();
        let s = spec.dual_witness(&u).unwrap();
        let size = lp(norm, &u);
        prop_assert!((dot(&s, &u) - size).abs() <= 1e-12 * size);
        prop_assert!((lp(norm.conjugate(), &s) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn primal_witness_norms_the_dual_vector((n, norm, ud, _u) in pair_inputs()) {
        prop_assume!(ud.iter().any(|&x| x != 0.0));
        let spec = DualPairSpec::new(n, norm).unwrap();
        let s = spec.primal_witness(&ud).unwrap();
        let size = lp(norm.conjugate(), &ud);
        prop_assert!((dot(&ud, &s) - size).abs() <= 1e-12 * size);
        prop_assert!((lp(norm, &s) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn twin_norm_equals_both_operator_norms(
        (rows, norm) in (1usize..=5).prop_flat_map(square).prop_flat_map(|r| (Just(r), norm_strategy()))
    ) {
        let n = rows.len();
        let t = TwinOperator::from_rows(&rows).unwrap();
        let spec = DualPairSpec::new(n, norm).unwrap();
        let twin = t.twin_norm(&spec).unwrap();
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        // independent closed forms: column sums (ℓ1), row sums (ℓ∞), top singular value (ℓ2)
        let col = (0..n).map(|j| (0..n).map(|i| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
        let row = (0..n).map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
        let spectral = m.clone().svd(false, false).singular_values.max();
        let expected = match norm {
            Norm::L1 => col,
            Norm::L2 => spectral,
            Norm::LInf => row,
        };
        prop_assert!((twin - expected).abs() <= 1e-10, "twin {twin} vs {expected}");
        prop_assert!((twin - t.primal_operator_norm(&spec)).abs() <= 1e-10);
        prop_assert!((twin - t.dual_operator_norm(&spec)).abs() <= 1e-10);
    }

    #[test]
    fn primal_and_dual_actions_are_adjoint(
        (rows, ud, u) in (1usize..=5).prop_flat_map(|n| (square(n), vector(n), vector(n)))
    ) {
        let t = TwinOperator::from_rows(&rows).unwrap();
        let tu = t.apply_primal(&u).unwrap();
        let tud = t.apply_dual(&ud).unwrap();
        let left = dot(&tud, &u);
        let right = dot(&ud, &tu);
        let form = t.form(&ud, &u).unwrap();
        let scale: f64 = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, a)| (i, j, a)))
            .map(|(i, j, a)| (ud[i] * a * u[j]).abs())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        prop_assert!((left - right).abs() <= 1e-12 * scale);
        prop_assert!((form - right).abs() <= 1e-12 * scale);
    }
}
