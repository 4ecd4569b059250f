use std::sync::Arc;

use fracbvp_core::classical::{solve_wl_wr, DiffusivityField};
use fracbvp_core::fracops::{left_frac_integral, oracle_frac_integral, right_frac_integral, PowerTermSum};
use fracbvp_core::integrate::{inner, CellRule};
use fracbvp_core::petrov::{perturbation_check, wellposedness_indicator};
use fracbvp_core::spaces::{build_partition, FemSpace, Grading};
use proptest::prelude::*;

fn bubble(a: f64, b: f64, c: f64) -> PowerTermSum {
    PowerTermSum::polynomial(&[0.0, a, b - a, c - b, -c])
}

/// K = 1 + e1 x + e2 x², kept positive on [0, 1].
fn poly_k(e1: f64, e2: f64) -> DiffusivityField {
    DiffusivityField::polynomial(vec![1.0, e1, e2]).unwrap()
}

fn space(n: usize) -> Arc<FemSpace> {
    Arc::new(FemSpace::hats(build_partition(n, Grading::Uniform).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn left_integral_matches_direct_quadrature(
        sigma in 0.1f64..0.95, a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, x in 0.05f64..1.0,
    ) {
        let w = bubble(a, b, c);
        let closed = left_frac_integral(&w, sigma, x).unwrap();
        let direct = oracle_frac_integral(|s| w.eval(s), sigma, x, 64).unwrap();
        prop_assert!((closed - direct).abs() <= 1e-10 * closed.abs().max(1.0));
    }

    #[test]
    fn semigroup_holds(s1 in 0.1f64..0.9, s2 in 0.1f64..0.9, a in -1.0f64..1.0, b in -1.0f64..1.0, x in 0.0f64..1.0) {
        let w = bubble(a, b, 0.3);
        let lhs = w.left_integral(s1).unwrap().left_integral(s2).unwrap().eval(x);
        let rhs = w.left_integral(s1 + s2).unwrap().eval(x);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        let lhs = w.right_integral(s1).unwrap().right_integral(s2).unwrap().eval(x);
        let rhs = w.right_integral(s1 + s2).unwrap().eval(x);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn left_and_right_integrals_are_adjoint(mu in 0.05f64..0.95, a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let w = bubble(a, b, c);
        let v = PowerTermSum::polynomial(&[c, a, b]);
        let lhs = inner(&w.left_integral(mu).unwrap(), &v, 0.0, 1.0, CellRule::default()).unwrap();
        let rhs = inner(&w, &v.right_integral(mu).unwrap(), 0.0, 1.0, CellRule::default()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn reflection_swaps_sides(sigma in 0.1f64..0.9, a in -1.0f64..1.0, b in -1.0f64..1.0, x in 0.0f64..1.0) {
        let w = bubble(a, b, -0.4);
        let r = w.reflected();
        let lhs = right_frac_integral(&w, sigma, x).unwrap();
        let rhs = left_frac_integral(&r, sigma, 1.0 - x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0));
    }

    #[test]
    fn boundary_profiles_partition_unity(e1 in -0.5f64..2.0, e2 in -0.4f64..1.0, x in 0.0f64..1.0) {
        let k = poly_k(e1, e2);
        let (wl, wr) = solve_wl_wr(&k).unwrap();
        let (l, r) = (wl.value(x), wr.value(x));
        prop_assert!((l + r - 1.0).abs() <= 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&l));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn indicator_is_scale_invariant(e1 in -0.5f64..2.0, e2 in -0.4f64..1.0, c in 0.1f64..10.0, theta in 0.0f64..1.0, beta in 0.1f64..0.45) {
        let k = poly_k(e1, e2);
        let a = wellposedness_indicator(&k, beta, theta, space(32)).unwrap();
        let b = wellposedness_indicator(&k.scaled(c).unwrap(), beta, theta, space(32)).unwrap();
        prop_assert!((a.xi - b.xi).abs() <= 1e-9);
        prop_assert!((perturbation_check(&k) - perturbation_check(&k.scaled(c).unwrap())).abs() <= 1e-9);
    }

    #[test]
    fn particular_solutions_cancel(e1 in -0.5f64..2.0, e2 in -0.4f64..1.0, theta in 0.0f64..1.0, beta in 0.1f64..0.45) {
        let r = wellposedness_indicator(&poly_k(e1, e2), beta, theta, space(32)).unwrap();
        prop_assert!(r.sum_l2 <= 1e-10 * r.u_l_norm.max(1.0));
        // The alternative form lacks the θ factor on lI^β u_r(1).
        prop_assert!((r.xi_discrepancy - (1.0 - theta) * r.left_functional.abs()).abs() <= 1e-10);
        prop_assert!((r.determinant - r.xi).abs() <= 1e-10);
    }

    #[test]
    fn one_sided_problems_are_wellposed(e1 in -0.5f64..2.0, e2 in -0.4f64..1.0, right in any::<bool>(), beta in 0.1f64..0.45) {
        let theta = if right { 1.0 } else { 0.0 };
        let r = wellposedness_indicator(&poly_k(e1, e2), beta, theta, space(32)).unwrap();
        prop_assert!(r.xi > 0.0);
    }
}
