//! Antiderivatives in a single variable, for the shapes that occur when
//! integrating densities and fluxes: powers and logarithms, powers of linear
//! polynomials, opaque functions through their declared antiderivative chains,
//! integration by parts against powers, and derivative-divides substitutions.
//! Every result is checked by differentiation.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{binomial, Atom, Context, Exp, Expr, Monomial, Poly, Var};

fn depends(e: &Expr, v: Var) -> bool {
    e.depends_on(v)
}

fn atom_depends(a: &Atom, v: Var) -> bool {
    match a {
        Atom::Var(w) => *w == v,
        Atom::Unknown { .. } => matches!(v, Var::T | Var::X),
        _ => {
            let mut s = std::collections::BTreeSet::new();
            a.collect_vars(&mut s);
            s.contains(&Atom::Var(v))
        }
    }
}

/// Derivative in `v` if it is nonzero and free of `v`.
fn linear_slope(ctx: &Context, e: &Expr, v: Var) -> Result<Option<Expr>> {
    let a = e.partial(ctx, v)?;
    if a.is_zero() || depends(&a, v) {
        Ok(None)
    } else {
        Ok(Some(a))
    }
}

#[derive(Clone, Debug)]
enum Factor {
    /// `p^s` with `p` linear in the variable.
    Linear { p: Poly, slope: Expr, s: Exp },
    /// Any other atom depending on the variable.
    Other { atom: Atom, exp: Exp },
}

fn int_power(v: Var, n: Exp) -> Expr {
    if n == -Exp::one() {
        Expr::func("log", vec![Expr::var(v)])
    } else {
        let e = n + Exp::one();
        Expr::var(v)
            .pow(e)
            .expect("power of a variable")
            .scale(&crate::expr::exp_to_coeff(&e).recip())
    }
}

/// `p^r / (r slope)` or `log(p) / slope`.
fn int_linear(p: &Poly, slope: &Expr, r: Exp) -> Result<Expr> {
    let base = Expr::from_poly(p.clone());
    let inv = slope.inverse()?;
    if r == -Exp::one() {
        return Ok(&Expr::func("log", vec![base]) * &inv);
    }
    let e = r + Exp::one();
    Ok(&base.pow(e)? * &inv.scale(&crate::expr::exp_to_coeff(&e).recip()))
}

/// Antiderivative of a unary function symbol or built-in applied to `w`, as a function of `w`.
fn function_antiderivative(ctx: &Context, name: &str, w: &Expr) -> Option<Expr> {
    match name {
        "exp" => Some(Expr::func("exp", vec![w.clone()])),
        "sin" => Some(Expr::func("cos", vec![w.clone()]).neg()),
        "cos" => Some(Expr::func("sin", vec![w.clone()])),
        "log" => Some(&(w * &Expr::func("log", vec![w.clone()])) - w),
        _ => ctx
            .symbols
            .antiderivative(name)
            .map(|g| Expr::func(g, vec![w.clone()])),
    }
}

struct Integrator<'a> {
    ctx: &'a Context,
    v: Var,
    depth: usize,
}

const MAX_DEPTH: usize = 24;

impl Integrator<'_> {
    fn fail(&self, e: &Expr) -> Error {
        Error::NoClosedForm {
            residual: e.to_string(),
            variable: self.v.to_string(),
        }
    }

    fn integrate(&mut self, e: &Expr) -> Result<Expr> {
        if !depends(e, self.v) {
            return Ok(e * &Expr::var(self.v));
        }
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.fail(e));
        }
        let out = self.integrate_sum(e);
        self.depth -= 1;
        out
    }

    fn integrate_sum(&mut self, e: &Expr) -> Result<Expr> {
        let v = self.v;
        let mut free_den = Expr::one();
        let mut dep: Vec<(Poly, u32)> = Vec::new();
        for (p, k) in e.denominator() {
            let pe = Expr::from_poly(p.clone());
            if depends(&pe, v) {
                dep.push((p.clone(), *k));
            } else {
                free_den = &free_den * &pe.pow_int(*k as i64)?;
            }
        }
        let inv_free = free_den.inverse()?;
        let mut lin_den: Option<(Poly, Expr, u32)> = None;
        if dep.len() == 1 {
            let (p, k) = &dep[0];
            if let Some(slope) = linear_slope(self.ctx, &Expr::from_poly(p.clone()), v)? {
                lin_den = Some((p.clone(), slope, *k));
            }
        }
        if !dep.is_empty() && lin_den.is_none() {
            return self.derivative_divides(e).ok_or_else(|| self.fail(e));
        }
        let mut acc = Expr::zero();
        for (m, c) in e.numerator().terms() {
            let mut n = Exp::zero();
            let mut factors: Vec<Factor> = Vec::new();
            let mut rest = Monomial::one();
            for (a, ex) in m.factors() {
                if !atom_depends(a, v) {
                    rest = rest.mul_raw(&Monomial::atom(a.clone(), *ex));
                    continue;
                }
                match a {
                    Atom::Var(w) if *w == v => n = *ex,
                    Atom::Radical(p) => {
                        match linear_slope(self.ctx, &Expr::from_poly(p.clone()), v)? {
                            Some(slope) => factors.push(Factor::Linear {
                                p: p.clone(),
                                slope,
                                s: *ex,
                            }),
                            None => factors.push(Factor::Other {
                                atom: a.clone(),
                                exp: *ex,
                            }),
                        }
                    }
                    _ => factors.push(Factor::Other {
                        atom: a.clone(),
                        exp: *ex,
                    }),
                }
            }
            if let Some((p, slope, k)) = &lin_den {
                let kk = Exp::from_integer(*k as i64);
                match factors
                    .iter_mut()
                    .find(|f| matches!(f, Factor::Linear { p: q, .. } if q == p))
                {
                    Some(Factor::Linear { s, .. }) => *s -= kk,
                    _ => factors.push(Factor::Linear {
                        p: p.clone(),
                        slope: slope.clone(),
                        s: -kk,
                    }),
                }
            }
            let coeff = &Expr::from_monomial(rest, c.clone()) * &inv_free;
            let core = match self.core(n, &factors)? {
                Some(r) => r,
                None => {
                    let term = self.term_expr(n, &factors)?;
                    match self.derivative_divides(&term) {
                        Some(r) => r,
                        None => return Err(self.fail(&(&term * &coeff))),
                    }
                }
            };
            acc = &acc + &(&coeff * &core);
        }
        Ok(acc)
    }

    fn term_expr(&self, n: Exp, factors: &[Factor]) -> Result<Expr> {
        let mut t = Expr::var(self.v).pow(n)?;
        for f in factors {
            let piece = match f {
                Factor::Linear { p, s, .. } => Expr::from_poly(p.clone()).pow(*s)?,
                Factor::Other { atom, exp } => Expr::from_monomial(
                    Monomial::atom(atom.clone(), *exp),
                    crate::expr::Coeff::one(),
                ),
            };
            t = &t * &piece;
        }
        Ok(t)
    }

    /// `int v^n * prod(factors) dv` for the recognised shapes.
    fn core(&mut self, n: Exp, factors: &[Factor]) -> Result<Option<Expr>> {
        let v = self.v;
        let nonneg_int = n.is_integer() && n >= Exp::zero();
        match factors {
            [] => Ok(Some(int_power(v, n))),
            [Factor::Linear { p, slope, s }] if nonneg_int => {
                // v = (p - b) / a with b free of v
                let pe = Expr::from_poly(p.clone());
                let b = &pe - &(slope * &Expr::var(v));
                let nn = n.to_integer() as usize;
                let inv_a = slope.inverse()?;
                let mut acc = Expr::zero();
                for j in 0..=nn {
                    let c = &b.neg().pow_int((nn - j) as i64)? * &inv_a.pow_int(nn as i64)?;
                    let c = c.scale(&binomial(nn, j));
                    let piece = int_linear(p, slope, *s + Exp::from_integer(j as i64))?;
                    acc = &acc + &(&c * &piece);
                }
                Ok(Some(acc))
            }
            [Factor::Other { atom, exp }] if n.is_zero() && exp.is_one() => {
                match atom {
                    Atom::Func { name, args } if args.len() == 1 => {
                        let w = &args[0];
                        let Some(slope) = linear_slope(self.ctx, w, v)? else {
                            return Ok(None);
                        };
                        Ok(function_antiderivative(self.ctx, name, w)
                            .map(|g| -> Result<Expr> { Ok(&g * &slope.inverse()?) })
                            .transpose()?)
                    }
                    Atom::Unknown { name, dt, dx } if v == Var::X && *dx > 0 => {
                        Ok(Some(Expr::unknown_derivative(name, *dt, *dx - 1)))
                    }
                    Atom::Unknown { name, dt, dx } if v == Var::T && *dt > 0 => {
                        Ok(Some(Expr::unknown_derivative(name, *dt - 1, *dx)))
                    }
                    _ => Ok(None),
                }
            }
            _ if nonneg_int && !n.is_zero() => {
                // by parts: v^n phi = v^n Phi - n int v^(n-1) Phi
                let Some(phi) = self.core(Exp::zero(), factors)? else {
                    return Ok(None);
                };
                let vn = Expr::var(v).pow(n)?;
                let lower = &Expr::var(v).pow(n - Exp::one())? * &phi;
                let rest = match self.integrate(&lower) {
                    Ok(r) => r,
                    Err(Error::NoClosedForm { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let nc = crate::expr::exp_to_coeff(&n);
                Ok(Some(&(&vn * &phi) - &rest.scale(&nc)))
            }
            _ => Ok(None),
        }
    }

    /// Finds `R` among simple candidates with `term / R'` free of the variable.
    fn derivative_divides(&self, term: &Expr) -> Option<Expr> {
        let v = self.v;
        let mut cands: Vec<Expr> = Vec::new();
        let atoms = term.atoms();
        for a in &atoms {
            if !atom_depends(a, v) {
                continue;
            }
            let value = match a {
                Atom::Radical(p) => Expr::from_poly(p.clone()),
                Atom::Func { name, args } if args.len() == 1 => {
                    if let Some(g) = function_antiderivative(self.ctx, name, &args[0]) {
                        cands.push(g);
                    }
                    Expr::from_monomial(Monomial::atom(a.clone(), Exp::one()), One::one())
                }
                _ => Expr::from_monomial(Monomial::atom(a.clone(), Exp::one()), One::one()),
            };
            let mut exps: Vec<Exp> = term
                .numerator()
                .terms()
                .map(|(m, _)| m.exponent(a))
                .collect();
            exps.sort();
            exps.dedup();
            for k in exps {
                if k == -Exp::one() {
                    cands.push(Expr::func("log", vec![value.clone()]));
                } else if let Ok(r) = value.pow(k + Exp::one()) {
                    cands.push(r);
                }
            }
        }
        for (p, k) in term.denominator() {
            let pe = Expr::from_poly(p.clone());
            if !depends(&pe, v) {
                continue;
            }
            if *k == 1 {
                cands.push(Expr::func("log", vec![pe.clone()]));
            } else if let Ok(r) = pe.pow_int(1 - *k as i64) {
                cands.push(r);
            }
        }
        for r in cands {
            let Ok(dr) = r.partial(self.ctx, v) else { continue };
            if dr.is_zero() {
                continue;
            }
            let Ok(q) = term.div(&dr) else { continue };
            if !depends(&q, v) {
                return Some(&q * &r);
            }
        }
        None
    }
}

/// Removes numerator terms free of `v` when the denominator is free of `v`.
fn drop_constant(r: &Expr, v: Var) -> Expr {
    if r
        .denominator()
        .iter()
        .any(|(p, _)| depends(&Expr::from_poly(p.clone()), v))
    {
        return r.clone();
    }
    let mut num = Poly::zero();
    for (m, c) in r.numerator().terms() {
        if m.factors().iter().any(|(a, _)| atom_depends(a, v)) {
            num.add_term(m.clone(), c.clone());
        }
    }
    let mut den = Expr::one();
    for (p, k) in r.denominator() {
        den = &den * &Expr::from_poly(p.clone()).pow_int(-(*k as i64)).expect("nonzero factor");
    }
    &Expr::from_poly(num) * &den
}

/// Antiderivative of `e` in `v`, with the integration constant zero.
pub fn integrate(ctx: &Context, e: &Expr, v: Var) -> Result<Expr> {
    let mut it = Integrator { ctx, v, depth: 0 };
    let r = drop_constant(&it.integrate(e)?, v);
    let back = r.partial(ctx, v)?;
    if !back.same_as(e) {
        return Err(Error::NoClosedForm {
            residual: e.to_string(),
            variable: v.to_string(),
        });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_with;

    fn check(ctx: &Context, s: &str, v: Var, expect: &str) {
        let e = parse_with(ctx, s).unwrap();
        let r = integrate(ctx, &e, v).unwrap();
        let want = parse_with(ctx, expect).unwrap();
        assert!(r.same_as(&want), "int {s} d{v} = {r}, expected {expect}");
    }

    #[test]
    fn powers_and_logs() {
        let ctx = Context::new();
        check(&ctx, "u", Var::U(0), "u^2/2");
        check(&ctx, "3*u^2*x + u1", Var::U(0), "u^3*x + u*u1");
        check(&ctx, "u^-1", Var::U(0), "log(u)");
        check(&ctx, "u^(-1/2)", Var::U(0), "2*u^(1/2)");
        check(&ctx, "t^2", Var::X, "t^2*x");
    }

    #[test]
    fn linear_powers() {
        let ctx = Context::new();
        check(&ctx, "1/(1 + t*u1)^3", Var::U(1), "-1/(2*t*(1 + t*u1)^2)");
        check(&ctx, "u/(1 + u)", Var::U(0), "u - log(1 + u)");
        check(&ctx, "(x + t)^(1/2)", Var::X, "2/3*(x + t)^(3/2)");
    }

    #[test]
    fn opaque_by_parts() {
        let ctx = Context::kdv_type();
        check(&ctx, "u*f(u)", Var::U(0), "u*fh(u) - fc(u)");
        check(&ctx, "f(u)", Var::U(0), "fh(u)");
        check(&ctx, "fh(u)*f(u)", Var::U(0), "fh(u)^2/2");
        check(&ctx, "u1*fp(u)", Var::U(0), "u1*f(u)");
    }

    #[test]
    fn elementary() {
        let ctx = Context::new();
        check(&ctx, "exp(2*x)", Var::X, "exp(2*x)/2");
        check(&ctx, "x*sin(x)", Var::X, "sin(x) - x*cos(x)");
        check(&ctx, "2*x*exp(x^2)", Var::X, "exp(x^2)");
    }

    #[test]
    fn failures() {
        let ctx = Context::new();
        let e = parse_with(&ctx, "exp(x^2)").unwrap();
        assert!(matches!(integrate(&ctx, &e, Var::X), Err(Error::NoClosedForm { .. })));
        let e = parse_with(&ctx, "1/(1 + x^2)").unwrap();
        assert!(matches!(integrate(&ctx, &e, Var::X), Err(Error::NoClosedForm { .. })));
    }
}
