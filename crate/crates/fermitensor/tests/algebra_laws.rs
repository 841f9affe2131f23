//! Property tests for the algebraic laws, driven by proptest-generated
//! inputs rather than fixed seeds.

use fermitensor::linalg::{cx, max_abs_vec, CVec};
use fermitensor::power::{FermiPower, Permutation};
use fermitensor::{epsilon, FermiProduct, Grade, GradedAlgebra, PowerElement};
use proptest::prelude::*;

fn car1() -> GradedAlgebra {
    GradedAlgebra::preset("car(1)").unwrap()
}

/// Sparse coefficient vectors over the 16 pair-basis slots.
fn pair_vector() -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    prop::collection::vec((0usize..16, -1.0f64..1.0, -1.0f64..1.0), 1..6)
}

fn to_cvec(terms: &[(usize, f64, f64)]) -> CVec {
    let mut v = CVec::zeros(16);
    for &(i, re, im) in terms {
        v[i] += cx(re, im);
    }
    v
}

/// A permutation of n letters from an arbitrary priority vector (argsort).
fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    prop::collection::vec(0u64..1_000_000, n).prop_map(move |keys| {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (keys[i], i));
        let mut images = vec![0usize; n];
        for (rank, &i) in order.iter().enumerate() {
            images[i] = rank;
        }
        Permutation::new(images).unwrap()
    })
}

proptest! {
    #[test]
    fn sign_rule_is_minus_one_only_for_two_odds(a in 0u8..2, b in 0u8..2) {
        let ga = if a == 0 { Grade::Even } else { Grade::Odd };
        let gb = if b == 0 { Grade::Even } else { Grade::Odd };
        let expected = if ga == Grade::Odd && gb == Grade::Odd { -1.0 } else { 1.0 };
        prop_assert_eq!(epsilon(ga, gb), expected);
    }

    #[test]
    fn star_is_involutive(terms in pair_vector()) {
        let alg = car1();
        let fp = FermiProduct::new(&alg, &alg).unwrap();
        let x = to_cvec(&terms);
        let back = fp.koszul_star(&fp.koszul_star(&x));
        prop_assert!(max_abs_vec(&(back - x)) < 1e-12);
    }

    #[test]
    fn star_reverses_products(x_terms in pair_vector(), y_terms in pair_vector()) {
        let alg = car1();
        let fp = FermiProduct::new(&alg, &alg).unwrap();
        let x = to_cvec(&x_terms);
        let y = to_cvec(&y_terms);
        let lhs = fp.koszul_star(&fp.koszul_multiply(&x, &y));
        let rhs = fp.koszul_multiply(&fp.koszul_star(&y), &fp.koszul_star(&x));
        prop_assert!(max_abs_vec(&(lhs - rhs)) < 1e-11);
    }

    #[test]
    fn multiplication_is_associative(
        x_terms in pair_vector(),
        y_terms in pair_vector(),
        z_terms in pair_vector(),
    ) {
        let alg = car1();
        let fp = FermiProduct::new(&alg, &alg).unwrap();
        let x = to_cvec(&x_terms);
        let y = to_cvec(&y_terms);
        let z = to_cvec(&z_terms);
        let l = fp.koszul_multiply(&fp.koszul_multiply(&x, &y), &z);
        let r = fp.koszul_multiply(&x, &fp.koszul_multiply(&y, &z));
        prop_assert!(max_abs_vec(&(l - r)) < 1e-11);
    }

    #[test]
    fn both_product_routes_agree(x_terms in pair_vector(), y_terms in pair_vector()) {
        let alg = car1();
        let fp = FermiProduct::new(&alg, &alg).unwrap();
        let x = to_cvec(&x_terms);
        let y = to_cvec(&y_terms);
        prop_assert!(fp.route_agreement(&x, &y).unwrap() < 1e-12);
    }

    #[test]
    fn signed_action_composes(
        g in permutation(4),
        h in permutation(4),
        word in prop::collection::vec(0usize..4, 4),
        re in -1.0f64..1.0,
    ) {
        let alg = car1();
        let p = FermiPower::new(&alg, 4).unwrap();
        let x = PowerElement::word(4, word, cx(re, 0.25));
        let lhs = p.permute(&g, &p.permute(&h, &x).unwrap()).unwrap();
        let rhs = p.permute(&g.compose(&h), &x).unwrap();
        prop_assert!(lhs.sub(&rhs).coeff_norm() < 1e-12);
        let via = p.permute_via_adjacent(&g, &x).unwrap();
        let direct = p.permute(&g, &x).unwrap();
        prop_assert!(via.sub(&direct).coeff_norm() < 1e-12);
    }

    #[test]
    fn action_inverse_round_trips(
        g in permutation(5),
        word in prop::collection::vec(0usize..4, 5),
    ) {
        let alg = car1();
        let p = FermiPower::new(&alg, 5).unwrap();
        let x = PowerElement::word(5, word, cx(1.0, -0.5));
        let back = p.permute(&g.inverse(), &p.permute(&g, &x).unwrap()).unwrap();
        prop_assert!(back.sub(&x).coeff_norm() < 1e-12);
    }
}
