//! Cross-module invariants: the algebra round-trips, the Lagrange bases
//! partition unity, and the conditioned laws agree exactly with the
//! independently generated coefficient tables.

use gpadams::coeffs::{ab_coefficients, am_coefficients, bd_coefficients, truncation_constant};
use gpadams::polybasis::{
    build_basis, lagrange_basis, rat, Family, Polynomial, Rational, AB_MAX_STEPS,
};
use gpadams::{derive_law, integrate_01};
use num_traits::Zero;
use proptest::collection::btree_set;
use proptest::prelude::*;

proptest! {
    #[test]
    fn antiderivative_then_derivative_round_trips(
        coeffs in proptest::collection::vec((-50i64..=50, 1i64..=12), 0..=9)
    ) {
        let p = Polynomial::new(coeffs.iter().map(|&(n, d)| rat(n, d)).collect());
        prop_assert_eq!(p.antiderivative().derivative(), p);
    }

    #[test]
    fn product_degrees_add(
        a in proptest::collection::vec(-9i64..=9, 1..=6),
        b in proptest::collection::vec(-9i64..=9, 1..=6),
    ) {
        let pa = Polynomial::new(a.iter().map(|&n| rat(n, 1)).collect());
        let pb = Polynomial::new(b.iter().map(|&n| rat(n, 1)).collect());
        prop_assume!(!pa.is_zero() && !pb.is_zero());
        let product = &pa * &pb;
        prop_assert_eq!(
            product.degree(),
            Some(pa.degree().unwrap() + pb.degree().unwrap())
        );
    }

    #[test]
    fn lagrange_elements_partition_unity(nodes in btree_set(-8i64..=8, 1..=7)) {
        let nodes: Vec<i64> = nodes.into_iter().collect();
        let mut total = Polynomial::zero();
        for &j in &nodes {
            total = &total + &lagrange_basis(j, &nodes).unwrap();
        }
        prop_assert_eq!(total, Polynomial::one());
    }
}

#[test]
fn window_evaluations_are_orthonormal_for_all_orders() {
    for s in 1..=AB_MAX_STEPS {
        let basis = build_basis(Family::Ab, s, false).unwrap();
        for p in 0..s as i64 {
            for q in 0..s as i64 {
                let dot: Rational = basis
                    .phi
                    .iter()
                    .map(|c| c.eval_i64(-p) * c.eval_i64(-q))
                    .sum();
                let expected = if p == q { rat(1, 1) } else { rat(0, 1) };
                assert_eq!(dot, expected, "s={s} p={p} q={q}");
            }
        }
    }
}

#[test]
fn window_coefficients_sum_to_one_exactly() {
    for s in 1..=AB_MAX_STEPS {
        let basis = build_basis(Family::Ab, s, false).unwrap();
        let total: Rational = basis.phi.iter().skip(1).map(|p| integrate_01(p)).sum();
        assert_eq!(total, rat(1, 1), "s={s}");
    }
}

#[test]
fn conditioned_means_equal_classical_tables_exactly() {
    for s in 1..=AB_MAX_STEPS {
        for (family, steps, table) in [
            (Family::Ab, s, ab_coefficients(s).unwrap()),
            (Family::Am, s + 1, am_coefficients(s + 1).unwrap()),
        ] {
            let plain = derive_law(family, steps, false).unwrap();
            let augmented = derive_law(family, steps, true).unwrap();
            assert_eq!(plain.f_weights, table, "{family} steps={steps}");
            assert_eq!(plain.y_weight, rat(1, 1));
            assert!(plain.sd_constant.is_zero(), "{family} steps={steps}");
            // augmenting leaves the mean untouched
            assert_eq!(augmented.f_weights, plain.f_weights);
            let weight_sum: Rational = plain.f_weights.iter().cloned().sum();
            assert_eq!(weight_sum, rat(1, 1));
        }
    }
}

#[test]
fn augmented_sd_equals_truncation_constant_both_routes() {
    for s in 1..=AB_MAX_STEPS {
        let law = derive_law(Family::Ab, s, true).unwrap();
        assert_eq!(law.sd_constant, truncation_constant(Family::Ab, s).unwrap());
        assert_eq!(law.sd_constant, am_coefficients(s + 1).unwrap()[0]);

        let am_law = derive_law(Family::Am, s + 1, true).unwrap();
        assert_eq!(
            am_law.sd_constant,
            truncation_constant(Family::Am, s + 1).unwrap()
        );
    }
}

#[test]
fn bd_stencil_sums_vanish() {
    for s in 1..=AB_MAX_STEPS {
        let deltas = bd_coefficients(s).unwrap();
        let total: Rational = deltas.iter().cloned().sum();
        assert!(total.is_zero(), "s={s}");
    }
}
