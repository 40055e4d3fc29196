//! Worked transformations of Harry Dym, KdV-type, KdV and Schwarzian-KdV equations.

use conservkit::conslaw::{characteristic, is_trivial_density, verify, ConservedVector};
use conservkit::expr::parse_with;
use conservkit::jet::{total_dx_n, EvolutionEquation};
use conservkit::transform::{pushforward_cv, transform_equation, validate_contact, ContactTransformation};
use conservkit::{Context, Expr};

fn e(ctx: &Context, s: &str) -> Expr {
    parse_with(ctx, s).unwrap()
}

fn dx(ctx: &Context, s: &str, k: usize) -> Expr {
    total_dx_n(ctx, &e(ctx, s), k).unwrap()
}

fn map(ctx: &Context, fwd: [&str; 3], inv: Option<[&str; 3]>) -> ContactTransformation {
    let ct = validate_contact(ctx, &e(ctx, fwd[0]), &e(ctx, fwd[1]), &e(ctx, fwd[2])).unwrap();
    match inv {
        Some([t, x, u]) => ct.with_inverse(ctx, &e(ctx, t), &e(ctx, x), &e(ctx, u)).unwrap(),
        None => ct,
    }
}

fn check(ctx: &Context, rhs: &str, ct: &ContactTransformation, want: &Expr, densities: &[&str]) {
    let eq = EvolutionEquation::new(ctx, e(ctx, rhs)).unwrap();
    let out = transform_equation(ctx, &eq, ct).unwrap();
    assert!(out.rhs().equals(ctx, want), "got {}\nwant {}", out.rhs(), want);
    for rho in densities {
        let cv = ConservedVector::from_density(ctx, &eq, e(ctx, rho)).unwrap();
        let pushed = pushforward_cv(ctx, &cv, ct).unwrap();
        assert!(verify(ctx, &pushed).unwrap(), "pushforward of {rho}");
    }
}

fn hd_ctx() -> Context {
    let mut ctx = Context::new();
    ctx.symbols.declare_unit("eps").unwrap();
    ctx
}

#[test]
fn harry_dym_to_third_derivative_form() {
    let ctx = hd_ctx();
    let ct = map(&ctx, ["-2*t*eps", "x", "u^-2"], Some(["-t*eps/2", "x", "eps*u^(-1/2)"]));
    let densities = ["u^-2", "x*u^-2", "x^2*u^-2"];
    check(&ctx, "u^3*u3", &ct, &dx(&ctx, "u^(-1/2)", 3), &densities);
    let eq = EvolutionEquation::new(&ctx, e(&ctx, "u^3*u3")).unwrap();
    let cv = ConservedVector::from_density(&ctx, &eq, e(&ctx, "u^-2")).unwrap();
    let pushed = pushforward_cv(&ctx, &cv, &ct).unwrap();
    assert!(characteristic(&ctx, &pushed).unwrap().is_one());
}

#[test]
fn harry_dym_point_map_from_two_laws() {
    let ctx = Context::new();
    let ct = map(&ctx, ["t", "-2/u", "x/2"], None);
    check(&ctx, "u^3*u3", &ct, &dx(&ctx, "1/(2*x^3*u1^2)", 2), &["u^-1", "u^-2"]);
}

#[test]
fn harry_dym_contact_map_of_first_order_law() {
    let ctx = Context::new();
    let ct = map(&ctx, ["t", "u1^2/u", "x - 2*u/u1"], Some(["t", "u + 2*x*u1", "x^3*u1^2"]));
    let want = dx(&ctx, "-x^8*u1^6/(4*(2*x*u2 + 3*u1)^2)", 1);
    check(&ctx, "u^3*u3", &ct, &want, &["u1^2/u"]);
    let eq = EvolutionEquation::new(&ctx, e(&ctx, "u^3*u3")).unwrap();
    let cv = ConservedVector::from_density(&ctx, &eq, e(&ctx, "u1^2/u")).unwrap();
    let pushed = pushforward_cv(&ctx, &cv, &ct).unwrap();
    assert!(is_trivial_density(&ctx, &(&pushed.rho - &Expr::u(0))).unwrap());
}

#[test]
fn kdv_type_hodograph() {
    let ctx = Context::kdv_type();
    let ct = map(&ctx, ["t", "u", "x"], None);
    let want = dx(&ctx, "-(1/(2*u1^2) + fc(x))", 2);
    check(&ctx, "u3 + f(u)*u1", &ct, &want, &["u", "u^2/2", "-u1^2/2 + fc(u)"]);
}

#[test]
fn kdv_type_square_density() {
    let mut ctx = Context::kdv_type();
    ctx.symbols.declare_unit("eps").unwrap();
    let ct = map(&ctx, ["t", "x", "u^2/2"], Some(["t", "x", "eps*(2*u)^(1/2)"]));
    let want = dx(
        &ctx,
        "u2 - 3/4*u1^2/u + eps*(2*u)^(1/2)*fh(eps*(2*u)^(1/2)) - fc(eps*(2*u)^(1/2))",
        1,
    );
    check(&ctx, "u3 + f(u)*u1", &ct, &want, &["u", "u^2/2"]);
}

#[test]
fn kdv_galilean_density_map() {
    let mut ctx = Context::new();
    ctx.symbols.declare_unit("pm").unwrap();
    let ct = map(&ctx, ["t", "x", "x*u + t*u^2/2"], None);
    // the inverse takes u = (-x + pm Z^(1/2)) / t, so the upper sign of the
    // displayed form is the root with pm = -1
    let want = dx(
        &ctx,
        "u2 - 3/2*t*u1^2/(x^2 + 2*t*u) - 3*x*u1/(x^2 + 2*t*u) - pm*(x^2 + 2*t*u)^(3/2)/(3*t^2) \
         + 3*u/(x^2 + 2*t*u) - x*u/t - x^3/(3*t^2)",
        1,
    );
    check(&ctx, "u3 + u*u1", &ct, &want, &["u"]);
}

#[test]
fn kdv_galilean_pair_map() {
    let ctx = Context::new();
    let ct = map(&ctx, ["t", "x + t*u", "u"], None);
    let eq = EvolutionEquation::new(&ctx, e(&ctx, "u3 + u*u1")).unwrap();
    let out = transform_equation(&ctx, &eq, &ct).unwrap();
    let first = dx(&ctx, "u2/(1 - t*u1)^3", 1);
    let second = dx(&ctx, "(1 - t*u1)^-2/(2*t)", 2);
    assert!(out.rhs().equals(&ctx, &first));
    assert!(out.rhs().equals(&ctx, &second));
    check(&ctx, "u3 + u*u1", &ct, &first, &["u", "x*u + t*u^2/2", "u^2/2"]);
}

#[test]
fn kdv_second_pair_map() {
    let ctx = Context::new();
    let ct = map(&ctx, ["t", "x/u + t", "u^3/3"], None);
    let want = dx(&ctx, "((x - t)*u1 + 6*u)*u1/(2*((x - t)*u1 + 3*u)^2)", 2);
    check(&ctx, "u3 + u*u1", &ct, &want, &["u^2/2", "x*u + t*u^2/2"]);
}

#[test]
fn schwarzian_contact_map() {
    let ctx = Context::new();
    let ct = map(
        &ctx,
        ["t", "u1", "2*x/u1^2 - 2*u/u1^3"],
        Some(["t", "(x^3*u1 + 3*x^2*u)/2", "(x^4*u1 + 2*x^3*u)/2"]),
    );
    let want = dx(&ctx, "-4*x^-5/(x^2*u2 + 6*x*u1 + 6*u)^2", 1);
    check(&ctx, "u3 - 3/2*u2^2/u1", &ct, &want, &["1/u1", "u/u1", "u^2/u1"]);
}
