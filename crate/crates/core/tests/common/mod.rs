//! Generators and property checks shared by the property suites and the
//! acceptance runner.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use conservkit::conslaw::{reduce_once, verify, ConservedVector};
use conservkit::expr::{Assignment, Coeff};
use conservkit::jet::{frechet, total_dt, total_dx, variational, DiffOp, EvolutionEquation};
use conservkit::{Context, Expr, Var};

/// Coefficient and exponents of `t, x, u, u1, u2, u3`.
pub type Term = (i64, [u32; 6]);

pub fn term(max_jet: usize) -> impl Strategy<Value = Term> {
    let caps = [2u32, 2, 3, 2, 2, 1];
    (
        prop_oneof![-4i64..=-1, 1i64..=4],
        [0..=caps[0], 0..=caps[1], 0..=caps[2], 0..=caps[3], 0..=caps[4], 0..=caps[5]],
    )
        .prop_map(move |(c, mut e)| {
            for (j, ej) in e.iter_mut().enumerate().skip(2) {
                if j - 2 > max_jet {
                    *ej = 0;
                }
            }
            (c, e)
        })
}

pub fn build(terms: &[Term]) -> Expr {
    let vars = [Var::T, Var::X, Var::U(0), Var::U(1), Var::U(2), Var::U(3)];
    terms
        .iter()
        .map(|(c, e)| {
            let mut m = Expr::int(*c);
            for (v, k) in vars.iter().zip(e) {
                m = &m * &Expr::var(*v).pow_int(*k as i64).unwrap();
            }
            m
        })
        .sum()
}

/// Polynomial differential function of order at most `max_jet`.
pub fn poly(max_jet: usize, max_terms: usize) -> impl Strategy<Value = Expr> {
    prop::collection::vec(term(max_jet), 1..=max_terms).prop_map(|ts| build(&ts))
}

/// Polynomial or polynomial over `(1 + u^2)^k` or `(2 + x^2 + u1^2)`.
pub fn diff_function(max_jet: usize) -> impl Strategy<Value = Expr> {
    (poly(max_jet, 4), 0usize..4).prop_map(|(p, k)| match k {
        1 => p.div(&Expr::parse("1 + u^2")).unwrap(),
        2 => p.div(&Expr::parse("(1 + u^2)^2")).unwrap(),
        3 => p.div(&Expr::parse("2 + x^2 + u1^2")).unwrap(),
        _ => p,
    })
}

/// Functions whose total derivative stays inside the class `invert_dx` integrates:
/// polynomials, times a power of `u` or over a polynomial in `t`.
pub fn primitive_function(max_jet: usize) -> impl Strategy<Value = Expr> {
    (poly(max_jet, 4), 0usize..4).prop_map(|(p, k)| match k {
        1 => &p * &Expr::parse("u^-2"),
        2 => &p * &Expr::parse("u^(1/2)"),
        3 => p.div(&Expr::parse("1 + t^2")).unwrap(),
        _ => p,
    })
}

/// Evolution equation `u_t = c u_n + lower-order polynomial terms`, `n` in 2..=3.
pub fn equation() -> impl Strategy<Value = EvolutionEquation> {
    (2usize..=3, prop_oneof![-3i64..=-1, 1i64..=3], poly(1, 3)).prop_map(|(n, c, lower)| {
        let ctx = Context::new();
        let rhs = &Expr::u(n).scale(&Coeff::from_integer(c.into())) + &lower;
        EvolutionEquation::new(&ctx, rhs).unwrap()
    })
}

/// Operator with jet-dependent coefficients of order up to 3.
pub fn operator() -> impl Strategy<Value = DiffOp> {
    prop::collection::vec(diff_function(2), 1..=4).prop_map(DiffOp::new)
}

/// Polynomial in `(t, x)` of total degree at most `degree`.
pub fn tx_poly(degree: u32) -> impl Strategy<Value = Expr> {
    prop::collection::vec((-3i64..=3, 0..=degree, 0..=degree), 1..=4).prop_map(move |ts| {
        ts.iter()
            .filter(|(_, a, b)| a + b <= degree)
            .map(|(c, a, b)| &(&Expr::int(*c) * &Expr::t().pow_int(*a as i64).unwrap()) * &Expr::x().pow_int(*b as i64).unwrap())
            .sum()
    })
}

pub trait ParseExt {
    fn parse(s: &str) -> Expr;
}

impl ParseExt for Expr {
    fn parse(s: &str) -> Expr {
        conservkit::expr::parse_expr(s).unwrap()
    }
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

pub fn check_variational_kills_dx(e: &Expr) -> Result<(), TestCaseError> {
    let ctx = Context::new();
    let d = variational(&ctx, &total_dx(&ctx, e).unwrap()).unwrap();
    if d.is_zero() {
        Ok(())
    } else {
        Err(fail(format!("delta D_x({e}) = {d}")))
    }
}

pub fn check_dt_dx_commute(e: &Expr, eq: &EvolutionEquation) -> Result<(), TestCaseError> {
    let ctx = Context::new();
    let a = total_dt(&ctx, &total_dx(&ctx, e).unwrap(), eq).unwrap();
    let b = total_dx(&ctx, &total_dt(&ctx, e, eq).unwrap()).unwrap();
    if (&a - &b).is_zero() {
        Ok(())
    } else {
        Err(fail(format!("[D_t, D_x]({e}) = {} for {eq}", &a - &b)))
    }
}

pub fn check_adjoint_involution(op: &DiffOp) -> Result<(), TestCaseError> {
    let ctx = Context::new();
    let back = op.adjoint(&ctx).unwrap().adjoint(&ctx).unwrap();
    if back.same_as(op) {
        Ok(())
    } else {
        Err(fail(format!("adjoint twice of {op} is {back}")))
    }
}

/// `rho = a u + b u^2/2 + c (u^3/6 - u1^2/2) + D_x phi` on KdV.
pub fn kdv_density(a: i64, b: i64, c: i64, phi: &Expr) -> Expr {
    let ctx = Context::new();
    let base = &(&Expr::u(0).scale(&Coeff::from_integer(a.into())) + &Expr::parse("u^2/2").scale(&Coeff::from_integer(b.into())))
        + &Expr::parse("u^3/6 - u1^2/2").scale(&Coeff::from_integer(c.into()));
    &base + &total_dx(&ctx, phi).unwrap()
}

pub fn kdv() -> EvolutionEquation {
    EvolutionEquation::new(&Context::new(), Expr::parse("u3 + u*u1")).unwrap()
}

/// Returns `Ok(false)` when the density is outside the precondition of `reduce_once`.
pub fn check_reduce_once(rho: &Expr) -> Result<bool, TestCaseError> {
    let ctx = Context::new();
    let eq = kdv();
    let k = rho.order();
    if k == 0 || rho.affine_in(&ctx, k).unwrap().is_none() {
        return Ok(false);
    }
    let cv = ConservedVector::from_density(&ctx, &eq, rho.clone()).map_err(|e| fail(format!("{rho}: {e}")))?;
    if !verify(&ctx, &cv).unwrap() {
        return Err(fail(format!("{rho} does not verify")));
    }
    let next = reduce_once(&ctx, &cv).map_err(|e| fail(format!("{rho}: {e}")))?;
    if next.rho.max_jet_index().is_some_and(|j| j >= k) {
        return Err(fail(format!("order of {} not below {k}", next.rho)));
    }
    if !verify(&ctx, &next).unwrap() {
        return Err(fail(format!("reduced vector of {rho} does not verify")));
    }
    let same = variational(&ctx, &(&next.rho - rho)).unwrap();
    if !same.is_zero() {
        return Err(fail(format!("reduction of {rho} changed the law")));
    }
    Ok(true)
}

pub fn check_invert_dx(phi: &Expr) -> Result<(), TestCaseError> {
    let ctx = Context::new();
    let g = total_dx(&ctx, phi).unwrap();
    let z = conservkit::conslaw::invert_dx(&ctx, &g).map_err(|e| fail(format!("{g}: {e}")))?;
    let back = total_dx(&ctx, &z).unwrap();
    if (&back - &g).is_zero() {
        Ok(())
    } else {
        Err(fail(format!("D_x(invert_dx({g})) = {back}")))
    }
}

/// Compares `f_*[w]` with central differences of `eps -> f[u + eps w]` at five
/// points, where the jets of `w` are independent numbers.
pub fn check_frechet(f: &Expr, seed: u64) -> Result<(), TestCaseError> {
    use rand::{Rng, SeedableRng};
    let ctx = Context::new();
    let op = frechet(&ctx, f).unwrap();
    let n = f.max_jet_index().unwrap_or(0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut tested = 0;
    let mut attempts = 0;
    while tested < 5 {
        attempts += 1;
        if attempts > 100 {
            return Err(fail(format!("no admissible sample points for {f}")));
        }
        let mut asg = Assignment::new();
        asg.set(Var::T, rng.gen_range(-1.5..1.5));
        asg.set(Var::X, rng.gen_range(-1.5..1.5));
        let jets: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let w: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let at = |asg: &Assignment, s: f64| {
            let mut a = asg.clone();
            for j in 0..=n {
                a.set(Var::U(j), jets[j] + s * w[j]);
            }
            f.eval(&a)
        };
        let mut exact = 0.0;
        let mut base = asg.clone();
        for j in 0..=n {
            base.set(Var::U(j), jets[j]);
        }
        let mut ok = true;
        for (i, c) in op.coeffs().iter().enumerate() {
            match c.eval(&base) {
                Ok(v) => exact += v * w[i],
                Err(_) => ok = false,
            }
        }
        let h = 1e-4;
        let (Ok(p), Ok(m)) = (at(&asg, h), at(&asg, -h)) else { continue };
        if !ok {
            continue;
        }
        let fd = (p - m) / (2.0 * h);
        let scale = exact.abs().max(fd.abs()).max(1.0);
        if (fd - exact).abs() > 1e-6 * scale {
            return Err(fail(format!("f = {f}: Frechet {exact} vs finite difference {fd}")));
        }
        tested += 1;
    }
    Ok(())
}
