//! Randomized invariants of transformations and conservation-law search.

mod common;

use common::*;
use proptest::prelude::*;

use conservkit::conslaw::{is_trivial_density, verify, ConservedVector};
use conservkit::discover::{find_conservation_laws, generate_basis, rank_modulo_trivial, spans, BasisSpec};
use conservkit::expr::{equals, parse_with, Coeff};
use conservkit::jet::{total_dx, EvolutionEquation};
use conservkit::transform::{pushforward_cv, transform_equation, validate_contact, ContactTransformation};
use conservkit::{Context, Expr};

fn q(k: i64) -> Expr {
    Expr::int(k)
}

/// `(t, a x + b u + c t, d x + e u)` with `ae - bd != 0`, with its inverse attached.
fn affine_map() -> impl Strategy<Value = ContactTransformation> {
    (-2i64..=2, -2i64..=2, -2i64..=2, -2i64..=2, -2i64..=2)
        .prop_filter("nondegenerate", |(a, b, _, d, e)| a * e - b * d != 0)
        .prop_map(|(a, b, c, d, e)| {
            let ctx = Context::new();
            let (t, x, u) = (Expr::t(), Expr::x(), Expr::u(0));
            let fx = &(&(&q(a) * &x) + &(&q(b) * &u)) + &(&q(c) * &t);
            let fu = &(&q(d) * &x) + &(&q(e) * &u);
            let det = Coeff::new((a * e - b * d).into(), 1.into()).recip();
            let shifted = &x - &(&q(c) * &t);
            let ix = (&(&q(e) * &shifted) - &(&q(b) * &u)).scale(&det);
            let iu = (&(&q(a) * &u) - &(&q(d) * &shifted)).scale(&det);
            validate_contact(&ctx, &t, &fx, &fu).unwrap().with_inverse(&ctx, &Expr::t(), &ix, &iu).unwrap()
        })
}

/// `u_t = D_x(c u_2 + G(t, x, u, u_1))`, which conserves `u`.
fn conservative_equation() -> impl Strategy<Value = EvolutionEquation> {
    (prop_oneof![-2i64..=-1, 1i64..=2], poly(1, 3)).prop_map(|(c, g)| {
        let ctx = Context::new();
        let flux = &(&q(c) * &Expr::u(2)) + &g;
        EvolutionEquation::new(&ctx, total_dx(&ctx, &flux).unwrap()).unwrap()
    })
}

fn contact_maps(ctx: &Context) -> Vec<ContactTransformation> {
    let p = |s: &str| parse_with(ctx, s).unwrap();
    vec![
        validate_contact(ctx, &p("t"), &p("u1^2/u"), &p("x - 2*u/u1")).unwrap(),
        validate_contact(ctx, &p("t"), &p("u1"), &p("2*x/u1^2 - 2*u/u1^3")).unwrap(),
        validate_contact(ctx, &p("t"), &p("u"), &p("x")).unwrap(),
        validate_contact(ctx, &p("t"), &p("x + t*u"), &p("u")).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inverse_map_restores_the_equation(ct in affine_map(), eq in equation()) {
        let ctx = Context::new();
        let there = transform_equation(&ctx, &eq, &ct).unwrap();
        let back = transform_equation(&ctx, &there, &ct.inverted(&ctx).unwrap()).unwrap();
        prop_assert!(equals(&ctx, back.rhs(), eq.rhs()).equal, "{} came back as {}", eq, back);
    }

    #[test]
    fn pushed_laws_verify(ct in affine_map(), eq in conservative_equation()) {
        let ctx = Context::new();
        let cv = ConservedVector::from_density(&ctx, &eq, Expr::u(0)).unwrap();
        let pushed = pushforward_cv(&ctx, &cv, &ct).unwrap();
        prop_assert!(verify(&ctx, &pushed).unwrap());
    }

    #[test]
    fn point_prolongation_order(ct in affine_map(), k in 1usize..=4) {
        let ctx = Context::new();
        let order = ct.prolong(&ctx, k).unwrap().order();
        prop_assert!(order <= k + 1, "order {order} for k = {k}");
    }

    #[test]
    fn discovered_laws_are_independent_and_nontrivial(eq in conservative_equation()) {
        let ctx = Context::new();
        let basis = generate_basis(&BasisSpec::new(1, 2, 1)).unwrap();
        let found = find_conservation_laws(&ctx, &eq, &basis).unwrap();
        let densities: Vec<Expr> = found.laws.iter().map(|l| l.representative.rho.clone()).collect();
        for l in &found.laws {
            prop_assert!(verify(&ctx, &l.representative).unwrap());
            prop_assert!(!is_trivial_density(&ctx, &l.representative.rho).unwrap());
        }
        prop_assert_eq!(rank_modulo_trivial(&ctx, &densities).unwrap(), densities.len());
        prop_assert!(spans(&ctx, &densities, &[Expr::u(0)]).unwrap(), "u missing from {:?}", densities);
    }
}

#[test]
fn contact_prolongation_order() {
    let ctx = Context::new();
    for ct in contact_maps(&ctx) {
        for k in 1..=4 {
            let order = ct.prolong(&ctx, k).unwrap().order();
            assert!(order <= k + 1, "{}: order {order} for k = {k}", ct.x);
        }
    }
}
