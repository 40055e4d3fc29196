//! Partial derivatives, substitution and splitting by jet monomials.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::symbols::Builtin;
use super::{Atom, Coeff, Context, Exp, Expr, Monomial, Poly, Var};
use crate::error::Result;

/// Coefficients of an expression that is polynomial in the jet variables.
/// Keys are monomials in `u_j` only; values are functions of `(t, x)` and constants.
pub type JetSplit = BTreeMap<Monomial, Expr>;

fn atom_mentions(a: &Atom, wrt: &Atom) -> bool {
    match a {
        Atom::Var(_) | Atom::Target(_) => a == wrt,
        Atom::Unit(_) => false,
        Atom::Unknown { .. } => matches!(wrt, Atom::Var(Var::T) | Atom::Var(Var::X)),
        Atom::Func { args, .. } => args.iter().any(|e| expr_mentions(e, wrt)),
        Atom::Radical(p) => poly_mentions(p, wrt),
    }
}

fn poly_mentions(p: &Poly, wrt: &Atom) -> bool {
    p.terms()
        .any(|(m, _)| m.factors().iter().any(|(a, _)| atom_mentions(a, wrt)))
}

fn expr_mentions(e: &Expr, wrt: &Atom) -> bool {
    poly_mentions(&e.num, wrt) || e.den.iter().any(|(p, _)| poly_mentions(p, wrt))
}

/// Action of a derivation on the basic atoms (variables, targets, unknowns).
pub type AtomRule<'a> = &'a dyn Fn(&Atom) -> Result<Expr>;

/// Derivative of the value carried by an atom (for radicals, of their base).
fn derive_atom(ctx: &Context, a: &Atom, rule: AtomRule) -> Result<Expr> {
    Ok(match a {
        Atom::Var(_) | Atom::Target(_) | Atom::Unknown { .. } => rule(a)?,
        Atom::Unit(_) => Expr::zero(),
        Atom::Func { name, args } => {
            let mut acc = Expr::zero();
            for (i, arg) in args.iter().enumerate() {
                let da = arg.derive(ctx, rule)?;
                if da.is_zero() {
                    continue;
                }
                let outer = match Builtin::from_name(name) {
                    Some(Builtin::Exp) => Expr::func("exp", args.clone()),
                    Some(Builtin::Log) => args[0].inverse()?,
                    Some(Builtin::Sin) => Expr::func("cos", args.clone()),
                    Some(Builtin::Cos) => Expr::func("sin", args.clone()).neg(),
                    None => {
                        let d = ctx.symbols.derivative(name, i)?;
                        Expr::func(d, args.clone())
                    }
                };
                acc = &acc + &(&outer * &da);
            }
            acc
        }
        Atom::Radical(p) => derive_poly(ctx, p, rule)?,
    })
}

fn derive_poly(ctx: &Context, p: &Poly, rule: AtomRule) -> Result<Expr> {
    let mut cache: BTreeMap<&Atom, Expr> = BTreeMap::new();
    let mut simple = Poly::zero();
    let mut general = Expr::zero();
    for (m, c) in p.terms() {
        for (a, e) in m.factors() {
            if !cache.contains_key(a) {
                let d = derive_atom(ctx, a, rule)?;
                cache.insert(a, d);
            }
            let da = &cache[a];
            if da.is_zero() {
                continue;
            }
            let rest = m.mul_raw(&Monomial::atom(a.clone(), -Exp::one()));
            let k = c * exp_coeff(*e);
            if da.den.is_empty() && rest.is_canonical() {
                let mut part = Poly::zero();
                for (dm, dc) in da.num.terms() {
                    let prod = rest.mul_raw(dm);
                    if prod.is_canonical() {
                        part.add_term(prod, &k * dc);
                    } else {
                        part.add_assign(&Poly::canonical_term(prod, &k * dc));
                    }
                }
                simple.add_assign(&part);
            } else {
                let term = Expr::from_monomial(rest, k);
                general = &general + &(&term * da);
            }
        }
    }
    Ok(&Expr::from_poly(simple) + &general)
}

fn exp_coeff(e: Exp) -> Coeff {
    Coeff::new((*e.numer()).into(), (*e.denom()).into())
}

impl Expr {
    /// Partial derivative in `t`, `x` or a jet variable.
    pub fn partial(&self, ctx: &Context, v: Var) -> Result<Expr> {
        self.partial_atom(ctx, &Atom::Var(v))
    }

    pub(crate) fn partial_atom(&self, ctx: &Context, wrt: &Atom) -> Result<Expr> {
        if !expr_mentions(self, wrt) {
            return Ok(Expr::zero());
        }
        let rule = |a: &Atom| -> Result<Expr> {
            Ok(match a {
                Atom::Unknown { name, dt, dx } => match wrt {
                    Atom::Var(Var::T) => Expr::atom(Atom::Unknown {
                        name: name.clone(),
                        dt: dt + 1,
                        dx: *dx,
                    }),
                    Atom::Var(Var::X) => Expr::atom(Atom::Unknown {
                        name: name.clone(),
                        dt: *dt,
                        dx: dx + 1,
                    }),
                    _ => Expr::zero(),
                },
                _ if a == wrt => Expr::one(),
                _ => Expr::zero(),
            })
        };
        self.derive(ctx, &rule)
    }

    /// Applies the derivation that acts on basic atoms by `rule`, extended to
    /// functions by the chain rule and to quotients by the quotient rule.
    pub fn derive(&self, ctx: &Context, rule: AtomRule) -> Result<Expr> {
        let dn = derive_poly(ctx, &self.num, rule)?;
        if self.den.is_empty() {
            return Ok(dn);
        }
        let inv_den = Expr {
            num: Poly::one(),
            den: self.den.clone(),
        };
        let mut acc = &dn * &inv_den;
        for (p, k) in &self.den {
            let dp = derive_poly(ctx, p, rule)?;
            if dp.is_zero() {
                continue;
            }
            let over_p = Expr {
                num: Poly::one(),
                den: vec![(p.clone(), 1)],
            };
            let term = (&(self * &dp) * &over_p).scale(&Coeff::from_integer((*k as i64).into()));
            acc = &acc - &term;
        }
        Ok(acc)
    }

    /// The order of a differential function: the largest `j` such that it depends
    /// on `u_j`, or 0 if it depends on none.
    pub fn order(&self) -> usize {
        self.max_jet_index().unwrap_or(0)
    }

    /// Replaces atoms. `f` returns the replacement for an atom or `None` to keep it;
    /// function arguments and radical bases are rewritten recursively.
    pub fn substitute(&self, f: &dyn Fn(&Atom) -> Option<Expr>) -> Result<Expr> {
        let mut cache: BTreeMap<Atom, Expr> = BTreeMap::new();
        let num = subst_poly(&self.num, f, &mut cache)?;
        let mut out = num;
        for (p, k) in &self.den {
            let d = subst_poly(p, f, &mut cache)?;
            out = &out * &d.pow_int(-(*k as i64))?;
        }
        Ok(out)
    }

    /// Substitutes variables by expressions.
    pub fn subs(&self, map: &BTreeMap<Var, Expr>) -> Result<Expr> {
        self.substitute(&|a| match a {
            Atom::Var(v) => map.get(v).cloned(),
            _ => None,
        })
    }

    /// Substitutes a single variable.
    pub fn subs1(&self, v: Var, e: &Expr) -> Result<Expr> {
        self.substitute(&|a| match a {
            Atom::Var(w) if *w == v => Some(e.clone()),
            _ => None,
        })
    }

    /// Splits by monomials in the jet variables, or `None` if the expression is not
    /// polynomial in them (jets in a denominator, inside a function or a radical).
    pub fn split_jets(&self) -> Option<JetSplit> {
        let is_jet = |a: &Atom| matches!(a, Atom::Var(Var::U(_)));
        let hides_jets = |a: &Atom| {
            let mut s = BTreeSet::new();
            a.collect_vars(&mut s);
            !is_jet(a) && s.iter().any(is_jet)
        };
        for (p, _) in &self.den {
            for (m, _) in p.terms() {
                if m.factors().iter().any(|(a, _)| is_jet(a) || hides_jets(a)) {
                    return None;
                }
            }
        }
        let mut parts: BTreeMap<Monomial, Poly> = BTreeMap::new();
        for (m, c) in self.num.terms() {
            if m.factors().iter().any(|(a, e)| hides_jets(a) || (is_jet(a) && (!e.is_integer() || *e < Exp::zero()))) {
                return None;
            }
            let (jm, rest) = m.split(is_jet);
            parts.entry(jm).or_default().add_term(rest, c.clone());
        }
        Some(
            parts
                .into_iter()
                .map(|(m, p)| {
                    (
                        m,
                        Expr {
                            num: p,
                            den: self.den.clone(),
                        }
                        .reduce(),
                    )
                })
                .collect(),
        )
    }

    /// The expression as `a + b * u_j` if it is affine in `u_j` (checked exactly).
    pub fn affine_in(&self, ctx: &Context, j: usize) -> Result<Option<(Expr, Expr)>> {
        let v = Var::U(j);
        let b = self.partial(ctx, v)?;
        if !b.partial(ctx, v)?.is_zero() {
            return Ok(None);
        }
        let a = self - &(&b * &Expr::u(j));
        Ok(Some((a, b)))
    }
}

fn subst_atom(
    a: &Atom,
    f: &dyn Fn(&Atom) -> Option<Expr>,
    cache: &mut BTreeMap<Atom, Expr>,
) -> Result<Expr> {
    if let Some(e) = cache.get(a) {
        return Ok(e.clone());
    }
    let out = match f(a) {
        Some(e) => e,
        None => match a {
            Atom::Func { name, args } => {
                let mut new_args = Vec::with_capacity(args.len());
                for arg in args {
                    new_args.push(arg.substitute(f)?);
                }
                Expr::func(name, new_args)
            }
            Atom::Radical(p) => subst_poly(p, f, cache)?,
            _ => Expr::atom(a.clone()),
        },
    };
    cache.insert(a.clone(), out.clone());
    Ok(out)
}

fn subst_poly(
    p: &Poly,
    f: &dyn Fn(&Atom) -> Option<Expr>,
    cache: &mut BTreeMap<Atom, Expr>,
) -> Result<Expr> {
    let mut acc = Expr::zero();
    for (m, c) in p.terms() {
        let mut term = Expr::rational(c.clone());
        for (a, e) in m.factors() {
            let v = subst_atom(a, f, cache)?;
            let factor = if e.is_one() { v } else { v.pow(*e)? };
            term = &term * &factor;
        }
        acc = &acc + &term;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_with;

    fn p(ctx: &Context, s: &str) -> Expr {
        parse_with(ctx, s).unwrap()
    }

    #[test]
    fn opaque_chain_rule() {
        let ctx = Context::kdv_type();
        assert_eq!(p(&ctx, "fh(u)").partial(&ctx, Var::U(0)).unwrap(), p(&ctx, "f(u)"));
        assert_eq!(
            p(&ctx, "fc(u^2)").partial(&ctx, Var::U(0)).unwrap(),
            p(&ctx, "2*u*fh(u^2)")
        );
    }

    #[test]
    fn simple_partials() {
        let ctx = Context::new();
        assert_eq!(p(&ctx, "u1^2").partial(&ctx, Var::U(1)).unwrap(), p(&ctx, "2*u1"));
        assert_eq!(p(&ctx, "x*u^-2").partial(&ctx, Var::X).unwrap(), p(&ctx, "u^-2"));
        let e = p(&ctx, "u1/(1+u)^2");
        assert_eq!(e.partial(&ctx, Var::U(0)).unwrap(), p(&ctx, "-2*u1/(1+u)^3"));
        let r = p(&ctx, "(1+u^2)^(1/2)");
        assert_eq!(r.partial(&ctx, Var::U(0)).unwrap(), p(&ctx, "u*(1+u^2)^(-1/2)"));
    }

    #[test]
    fn order_examples() {
        let ctx = Context::new();
        assert_eq!(p(&ctx, "u^3*u3").order(), 3);
        assert_eq!(p(&ctx, "x^2+t").order(), 0);
        assert_eq!(p(&ctx, "u1^2/u").order(), 1);
    }

    #[test]
    fn missing_rule_is_an_error() {
        let ctx = Context::kdv_type();
        assert!(p(&ctx, "fppp(u)").partial(&ctx, Var::U(0)).is_err());
        assert!(p(&ctx, "fppp(u)").partial(&ctx, Var::X).unwrap().is_zero());
    }

    #[test]
    fn split_by_jets() {
        let ctx = Context::new();
        let e = p(&ctx, "x*u1*u2 + t*u1*u2 + 3*u/(1+x)");
        let s = e.split_jets().unwrap();
        assert_eq!(s.len(), 2);
        assert!(p(&ctx, "1/u").split_jets().is_none());
    }

    #[test]
    fn substitution() {
        let ctx = Context::new();
        let e = p(&ctx, "u^2*x + u1");
        let r = e.subs1(Var::U(0), &p(&ctx, "x+t")).unwrap();
        assert_eq!(r, p(&ctx, "(x+t)^2*x + u1"));
    }
}
