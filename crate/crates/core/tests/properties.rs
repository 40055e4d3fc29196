//! Randomized identities of the expression engine, total derivatives and reductions.

mod common;

use common::*;
use proptest::prelude::*;

use conservkit::conslaw::{characteristic, invert_dx, is_cosymmetry, ConservedVector};
use conservkit::expr::{equals, parse_expr};
use conservkit::jet::{frechet, total_dx, variational, DiffOp};
use conservkit::{Context, Expr, Var};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(256)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn variational_annihilates_total_derivatives(e in diff_function(3)) {
        check_variational_kills_dx(&e)?;
    }

    #[test]
    fn total_derivatives_commute(e in diff_function(2), eq in equation()) {
        check_dt_dx_commute(&e, &eq)?;
    }

    #[test]
    fn adjoint_is_an_involution(op in operator()) {
        check_adjoint_involution(&op)?;
    }

    #[test]
    fn reduce_once_lowers_order(a in -3i64..=3, b in -3i64..=3, c in -2i64..=2, phi in poly(2, 3)) {
        let rho = kdv_density(a, b, c, &phi);
        let applied = check_reduce_once(&rho)?;
        prop_assume!(applied);
    }

    #[test]
    fn invert_dx_round_trip(phi in primitive_function(2)) {
        check_invert_dx(&phi)?;
    }

    #[test]
    fn frechet_matches_finite_differences(f in diff_function(3), seed in any::<u64>()) {
        check_frechet(&f, seed)?;
    }

    #[test]
    fn printing_is_idempotent(e in diff_function(3)) {
        let printed = e.to_string();
        let back = parse_expr(&printed).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_string(), printed);
    }

    #[test]
    fn equality_is_an_equivalence(a in diff_function(2), b in diff_function(2)) {
        let ctx = Context::new();
        let q = Expr::parse("3 + x^2*u1^2");
        let a2 = (&a * &q).div(&q).unwrap();
        let a3 = parse_expr(&a2.to_string()).unwrap();
        prop_assert!(equals(&ctx, &a, &a).equal);
        prop_assert!(equals(&ctx, &a, &a2).equal && equals(&ctx, &a2, &a).equal);
        prop_assert!(equals(&ctx, &a2, &a3).equal && equals(&ctx, &a, &a3).equal);
        prop_assert_eq!(equals(&ctx, &a, &b).equal, equals(&ctx, &b, &a).equal);
    }

    #[test]
    fn partial_derivatives_commute(e in diff_function(3), i in 0usize..6, j in 0usize..6) {
        let ctx = Context::new();
        let vars = [Var::T, Var::X, Var::U(0), Var::U(1), Var::U(2), Var::U(3)];
        let (vi, vj) = (vars[i], vars[j]);
        let a = e.partial(&ctx, vi).unwrap().partial(&ctx, vj).unwrap();
        let b = e.partial(&ctx, vj).unwrap().partial(&ctx, vi).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn leibniz_rule(a in diff_function(2), b in diff_function(2)) {
        let ctx = Context::new();
        let lhs = total_dx(&ctx, &(&a * &b)).unwrap();
        let rhs = &(&total_dx(&ctx, &a).unwrap() * &b) + &(&a * &total_dx(&ctx, &b).unwrap());
        prop_assert!((&lhs - &rhs).is_zero());
    }

    #[test]
    fn adjoint_pairing_is_a_divergence(op in operator(), a in poly(2, 2), b in poly(2, 2)) {
        let ctx = Context::new();
        let adj = op.adjoint(&ctx).unwrap();
        let d = &(&a * &op.apply(&ctx, &b).unwrap()) - &(&b * &adj.apply(&ctx, &a).unwrap());
        prop_assert!(variational(&ctx, &d).unwrap().is_zero());
    }

    #[test]
    fn characteristics_are_self_adjoint_cosymmetries(a in -3i64..=3, b in -3i64..=3, c in -2i64..=2, d in -2i64..=2, phi in poly(1, 2)) {
        let ctx = Context::new();
        let eq = kdv();
        let rho = &kdv_density(a, b, c, &phi) + &Expr::parse("x*u + t*u^2/2").scale(&conservkit::expr::Coeff::from_integer(d.into()));
        let cv = ConservedVector::from_density(&ctx, &eq, rho).unwrap();
        let g = characteristic(&ctx, &cv).unwrap();
        prop_assert!(is_cosymmetry(&ctx, &eq, &g).unwrap());
        prop_assert!(frechet(&ctx, &g).unwrap().is_self_adjoint(&ctx).unwrap());
    }

    #[test]
    fn invert_dx_rejects_non_derivatives(e in poly(2, 3)) {
        let ctx = Context::new();
        let exact = variational(&ctx, &e).unwrap().is_zero();
        prop_assert_eq!(invert_dx(&ctx, &e).is_ok(), exact);
    }
}

#[test]
fn operator_normal_form_is_unique() {
    let ctx = Context::new();
    let a = DiffOp::new(vec![Expr::one(), Expr::x()]);
    let b = DiffOp::dx_pow(1).compose(&ctx, &DiffOp::multiplication(Expr::x())).unwrap();
    assert!(a.same_as(&b));
    assert!(!a.same_as(&DiffOp::new(vec![Expr::x(), Expr::one()])));
}
