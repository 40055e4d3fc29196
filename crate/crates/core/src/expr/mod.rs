//! Differential functions: expressions in `t`, `x`, the jet variables `u_j`,
//! rational constants and opaque function symbols.
//!
//! Every [`Expr`] is kept in a canonical rational form `num / (p_1^k_1 ... p_m^k_m)`
//! where `num` is a Laurent polynomial over atoms with rational exponents and the
//! `p_i` are monic, monomial-free polynomials. Zero testing is exact on this form:
//! an expression is zero iff its numerator is.

mod calculus;
mod display;
mod equality;
mod eval;
mod parse;
mod poly;
mod symbols;

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use calculus::JetSplit;
pub(crate) use equality::in_decidable_fragment;
pub use equality::{equals, equals_with, EqualityMethod, EqualityOptions, Verdict};
pub use eval::{Assignment, SampleFunction, Sampler};
pub use parse::{parse_expr, parse_with, Ast, Lexer, Parser, Token, TokenKind};
pub use poly::{Coeff, Exp, Monomial, Poly};
pub use symbols::{Context, FunctionSymbol, SymbolTable, DEFAULT_NMAX};

/// Independent variables and jet coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    X,
    /// `u_j = d^j u / dx^j`; `U(0)` is `u` itself.
    U(usize),
}

impl Var {
    pub fn jet_index(self) -> Option<usize> {
        match self {
            Var::U(j) => Some(j),
            _ => None,
        }
    }
}

/// Indivisible factors of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    Var(Var),
    /// Coordinates of the image of a change of variables; used while rewriting.
    Target(Var),
    /// Constant with square one, such as the sign of `u`.
    Unit(String),
    /// Derivative `d^dt/dt d^dx/dx g(t, x)` of an unknown coefficient function.
    Unknown { name: String, dt: u32, dx: u32 },
    /// Application of an opaque or built-in function symbol.
    Func { name: String, args: Vec<Expr> },
    /// Fractional power of a polynomial or positive integer; exponent in (0, 1).
    Radical(Poly),
}

impl Atom {
    pub(crate) fn collect_vars(&self, out: &mut std::collections::BTreeSet<Atom>) {
        match self {
            Atom::Var(_) | Atom::Target(_) => {
                out.insert(self.clone());
            }
            Atom::Unknown { .. } => {
                out.insert(Atom::Var(Var::T));
                out.insert(Atom::Var(Var::X));
            }
            Atom::Unit(_) => {}
            Atom::Func { args, .. } => {
                for a in args {
                    a.collect_vars_into(out);
                }
            }
            Atom::Radical(p) => collect_poly_vars(p, out),
        }
    }
}

fn collect_poly_vars(p: &Poly, out: &mut std::collections::BTreeSet<Atom>) {
    for (m, _) in p.terms() {
        for (a, _) in m.factors() {
            a.collect_vars(out);
        }
    }
}

/// A differential function in canonical rational form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Expr {
    num: Poly,
    den: Vec<(Poly, u32)>,
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr {
            num: Poly::zero(),
            den: Vec::new(),
        }
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn frac(p: i64, q: i64) -> Expr {
        Expr::rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn rational(c: BigRational) -> Expr {
        Expr {
            num: Poly::constant(c),
            den: Vec::new(),
        }
    }

    pub fn var(v: Var) -> Expr {
        Expr::atom(Atom::Var(v))
    }

    pub fn t() -> Expr {
        Expr::var(Var::T)
    }

    pub fn x() -> Expr {
        Expr::var(Var::X)
    }

    /// Jet variable `u_j`.
    pub fn u(j: usize) -> Expr {
        Expr::var(Var::U(j))
    }

    pub fn target(v: Var) -> Expr {
        Expr::atom(Atom::Target(v))
    }

    pub fn unit(name: &str) -> Expr {
        Expr::atom(Atom::Unit(name.to_string()))
    }

    pub fn unknown(name: &str) -> Expr {
        Expr::atom(Atom::Unknown {
            name: name.to_string(),
            dt: 0,
            dx: 0,
        })
    }

    /// `d^dt/dt d^dx/dx` of the unknown function `name(t, x)`.
    pub fn unknown_derivative(name: &str, dt: u32, dx: u32) -> Expr {
        Expr::atom(Atom::Unknown {
            name: name.to_string(),
            dt,
            dx,
        })
    }

    pub(crate) fn atom(a: Atom) -> Expr {
        debug_assert!(!matches!(a, Atom::Radical(_)));
        Expr {
            num: Poly::term(Monomial::atom(a, Exp::one()), Coeff::one()),
            den: Vec::new(),
        }
    }

    /// Application of a function symbol, with the elementary identities
    /// `exp(0) = 1`, `log(1) = 0`, `sin(0) = 0`, `cos(0) = 1`.
    pub fn func(name: &str, args: Vec<Expr>) -> Expr {
        if args.len() == 1 {
            if let Some(c) = args[0].as_constant() {
                match name {
                    "exp" if c.is_zero() => return Expr::one(),
                    "log" if c.is_one() => return Expr::zero(),
                    "sin" if c.is_zero() => return Expr::zero(),
                    "cos" if c.is_zero() => return Expr::one(),
                    _ => {}
                }
            }
        }
        Expr::atom(Atom::Func {
            name: name.to_string(),
            args,
        })
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr {
            num: p,
            den: Vec::new(),
        }
    }

    /// `c * m`, applying the unit and radical rewrite rules.
    pub fn from_monomial(m: Monomial, c: Coeff) -> Expr {
        if m.is_canonical() {
            return Expr::from_poly(Poly::term(m, c));
        }
        let red = m.reduce();
        let mut out = Expr::from_poly(Poly::term(red.mono, c));
        for (base, k) in red.mul {
            out = &out * &Expr::from_poly(base.pow(k));
        }
        for (base, k) in red.div {
            let d = Expr::from_poly(base)
                .pow_int(k as i64)
                .and_then(|e| e.inverse())
                .expect("radical base is nonzero");
            out = &out * &d;
        }
        out
    }

    /// Builds a canonical expression from a numerator and denominator factors that
    /// are already monic and monomial-free.
    fn from_parts(num: Poly, mut den: Vec<(Poly, u32)>) -> Expr {
        if num.is_zero() {
            return Expr::zero();
        }
        den.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Poly, u32)> = Vec::with_capacity(den.len());
        for (p, k) in den {
            if k == 0 {
                continue;
            }
            match merged.last_mut() {
                Some((q, j)) if *q == p => *j += k,
                _ => merged.push((p, k)),
            }
        }
        if merged.len() > 1 {
            merged = refine_factors(merged);
        }
        Expr { num, den: merged }.reduce()
    }

    /// Cancels denominator factors that divide the numerator.
    fn reduce(mut self) -> Expr {
        if self.num.is_zero() {
            return Expr::zero();
        }
        for (p, k) in self.den.iter_mut() {
            while *k > 0 {
                match self.num.div_exact(p) {
                    Some(q) => {
                        self.num = q;
                        *k -= 1;
                    }
                    None => break,
                }
            }
        }
        self.den.retain(|(_, k)| *k > 0);
        self
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &[(Poly, u32)] {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.is_one()
    }

    /// The rational value of a constant expression.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    /// Number of numerator terms, a rough size measure.
    pub fn size(&self) -> usize {
        self.num.len() + self.den.iter().map(|(p, _)| p.len()).sum::<usize>()
    }

    fn den_lcm(a: &[(Poly, u32)], b: &[(Poly, u32)]) -> Vec<(Poly, u32)> {
        let mut out: Vec<(Poly, u32)> = a.to_vec();
        for (p, k) in b {
            match out.iter_mut().find(|(q, _)| q == p) {
                Some((_, j)) => *j = (*j).max(*k),
                None => out.push((p.clone(), *k)),
            }
        }
        out.sort_by(|x, y| x.0.cmp(&y.0));
        out
    }

    fn cofactor(lcm: &[(Poly, u32)], den: &[(Poly, u32)]) -> Poly {
        let mut acc = Poly::one();
        for (p, k) in lcm {
            let have = den.iter().find(|(q, _)| q == p).map(|(_, j)| *j).unwrap_or(0);
            if *k > have {
                acc = acc.mul(&p.pow(k - have));
            }
        }
        acc
    }

    pub fn add(&self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den.is_empty() && other.den.is_empty() {
            return Expr::from_poly(self.num.add(&other.num));
        }
        if self.den == other.den {
            return Expr::from_parts(self.num.add(&other.num), self.den.clone());
        }
        let lcm = Expr::den_lcm(&self.den, &other.den);
        let a = self.num.mul(&Expr::cofactor(&lcm, &self.den));
        let b = other.num.mul(&Expr::cofactor(&lcm, &other.den));
        Expr::from_parts(a.add(&b), lcm)
    }

    pub fn neg(&self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let num = self.num.mul(&other.num);
        if self.den.is_empty() && other.den.is_empty() {
            return Expr::from_poly(num);
        }
        let mut den = self.den.clone();
        den.extend(other.den.iter().cloned());
        Expr::from_parts(num, den)
    }

    pub fn scale(&self, c: &BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn inverse(&self) -> Result<Expr> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (c, m, p) = self.num.split_content();
        let mut num = Poly::one();
        for (q, k) in &self.den {
            num = num.mul(&q.pow(*k));
        }
        let mut out = Expr::from_poly(num).scale(&c.recip());
        out = &out * &Expr::from_monomial(m.pow_raw(-Exp::one()), Coeff::one());
        if !p.is_one() {
            // p is monic and monomial-free: it becomes a denominator factor as is
            out = Expr::from_parts(out.num, {
                let mut d = out.den;
                d.push((p, 1));
                d
            });
        }
        Ok(out)
    }

    pub fn div(&self, other: &Expr) -> Result<Expr> {
        Ok(self.mul(&other.inverse()?))
    }

    pub fn pow_int(&self, n: i64) -> Result<Expr> {
        if n < 0 {
            return self.inverse()?.pow_int(-n);
        }
        let mut acc = Expr::one();
        let mut base = self.clone();
        let mut k = n as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    /// Rational power. Fractional powers take the principal (positive) branch, so
    /// `(a b)^r = a^r b^r` is applied formally.
    pub fn pow(&self, r: Exp) -> Result<Expr> {
        if r.is_integer() {
            return self.pow_int(r.to_integer());
        }
        if self.is_zero() {
            return if r > Exp::zero() {
                Ok(Expr::zero())
            } else {
                Err(Error::DivisionByZero)
            };
        }
        let (c, m, mut p) = self.num.split_content();
        let mut out = Expr::from_monomial(m.pow_raw(r), Coeff::one());
        let c = if c.is_negative() && r.denom() % 2 == 0 {
            if p.is_one() {
                return Err(Error::NegativeFractionalPower);
            }
            p = p.neg();
            -c
        } else {
            c
        };
        out = &out * &rational_pow(&c, r)?;
        if !p.is_one() {
            out = &out * &poly_pow(&p, r)?;
        }
        for (d, k) in &self.den {
            out = &out * &poly_pow(d, -r * Exp::from_integer(*k as i64))?;
        }
        Ok(out)
    }

    pub fn sqrt(&self) -> Result<Expr> {
        self.pow(Exp::new(1, 2))
    }

    pub(crate) fn collect_vars_into(&self, out: &mut std::collections::BTreeSet<Atom>) {
        collect_poly_vars(&self.num, out);
        for (p, _) in &self.den {
            collect_poly_vars(p, out);
        }
    }

    /// All atoms of this expression (including nested ones) that are variables.
    pub fn free_vars(&self) -> std::collections::BTreeSet<Var> {
        let mut set = std::collections::BTreeSet::new();
        self.collect_vars_into(&mut set);
        set.into_iter()
            .filter_map(|a| match a {
                Atom::Var(v) => Some(v),
                _ => None,
            })
            .collect()
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.free_vars().contains(&v)
    }

    /// Largest jet index occurring syntactically, if any.
    pub fn max_jet_index(&self) -> Option<usize> {
        self.free_vars().into_iter().filter_map(Var::jet_index).max()
    }

    pub fn has_jet_vars(&self) -> bool {
        self.max_jet_index().is_some()
    }

    /// Visits every atom in numerator and denominators (not recursing into atoms).
    pub fn atoms(&self) -> std::collections::BTreeSet<Atom> {
        let mut set = std::collections::BTreeSet::new();
        let mut visit = |p: &Poly| {
            for (m, _) in p.terms() {
                for (a, _) in m.factors() {
                    set.insert(a.clone());
                }
            }
        };
        visit(&self.num);
        for (p, _) in &self.den {
            visit(p);
        }
        set
    }
}

/// Splits denominator factors that are divisible by other factors, so each
/// polynomial enters through the smallest available pieces.
fn refine_factors(mut den: Vec<(Poly, u32)>) -> Vec<(Poly, u32)> {
    let mut changed = true;
    while changed {
        changed = false;
        'outer: for i in 0..den.len() {
            for j in 0..den.len() {
                if i == j || den[i].0.len() < den[j].0.len() {
                    continue;
                }
                if let Some(q) = den[i].0.div_exact(&den[j].0) {
                    let k = den[i].1;
                    let pj = den[j].0.clone();
                    den.remove(i);
                    den.push((pj, k));
                    if !q.is_one() {
                        den.push((q, k));
                    }
                    changed = true;
                    break 'outer;
                }
            }
        }
        if changed {
            den.sort_by(|a, b| a.0.cmp(&b.0));
            let mut merged: Vec<(Poly, u32)> = Vec::with_capacity(den.len());
            for (p, k) in den {
                match merged.last_mut() {
                    Some((q, j)) if *q == p => *j += k,
                    _ => merged.push((p, k)),
                }
            }
            den = merged;
        }
    }
    den
}

/// `c^r` for a positive rational `c` (negative `c` only with odd root).
fn rational_pow(c: &BigRational, r: Exp) -> Result<Expr> {
    let neg = c.is_negative();
    let c = c.abs();
    let (p, q) = (*r.numer(), *r.denom());
    let base = if p < 0 { c.recip() } else { c };
    let pw = p.unsigned_abs() as u32;
    let a = num_traits::pow(base.numer().clone(), pw as usize);
    let b = num_traits::pow(base.denom().clone(), pw as usize);
    let q32 = q as u32;
    let (sa, ra) = extract_root(&a, q32);
    let (sb, rb) = extract_root(&b, q32);
    let mut out = Expr::rational(BigRational::new(sa, sb));
    if !ra.is_one() {
        out = &out * &radical_atom(Poly::constant(BigRational::from_integer(ra)), Exp::new(1, q));
    }
    if !rb.is_one() {
        let pb = Poly::constant(BigRational::from_integer(rb.clone()));
        out = &out * &radical_atom(pb, Exp::new(q - 1, q));
        out = out.scale(&BigRational::new(BigInt::one(), rb));
    }
    if neg {
        if q % 2 == 0 {
            return Err(Error::NegativeFractionalPower);
        }
        if p % 2 != 0 {
            out = out.neg();
        }
    }
    Ok(out)
}

/// Splits `n = s^q * rest` extracting small prime powers and perfect powers.
fn extract_root(n: &BigInt, q: u32) -> (BigInt, BigInt) {
    let mut rest = n.clone();
    let mut s = BigInt::one();
    let mut p = BigInt::from(2u32);
    let limit = BigInt::from(1000u32);
    while p < limit && rest > BigInt::one() {
        let pq = num_traits::pow(p.clone(), q as usize);
        while (&rest % &pq).is_zero() {
            rest /= &pq;
            s *= &p;
        }
        p += 1;
    }
    let root = rest.nth_root(q);
    if num_traits::pow(root.clone(), q as usize) == rest {
        s *= root;
        rest = BigInt::one();
    }
    (s, rest)
}

/// `radical(base)^e` for `e` in (0, 1).
fn radical_atom(base: Poly, e: Exp) -> Expr {
    debug_assert!(e > Exp::zero() && e < Exp::one());
    Expr::from_poly(Poly::term(Monomial::atom(Atom::Radical(base), e), Coeff::one()))
}

/// `p^s` for a monomial-free polynomial `p` with leading coefficient of modulus one.
fn poly_pow(p: &Poly, s: Exp) -> Result<Expr> {
    let fl = s.floor();
    let frac = s - fl;
    let base = Expr::from_poly(p.clone());
    let mut out = base.pow_int(fl.to_integer())?;
    if !frac.is_zero() {
        out = &out * &radical_atom(p.clone(), frac);
    }
    Ok(out)
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(&self, &rhs)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(&self, &rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(&self, &rhs)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        // numerators sharing a denominator are accumulated in place
        let mut groups: Vec<(Vec<(Poly, u32)>, Poly)> = Vec::new();
        for e in iter {
            if e.is_zero() {
                continue;
            }
            match groups.iter_mut().find(|(d, _)| *d == e.den) {
                Some((_, n)) => n.add_assign(&e.num),
                None => groups.push((e.den, e.num)),
            }
        }
        groups.into_iter().fold(Expr::zero(), |acc, (den, num)| {
            let part = if den.is_empty() { Expr::from_poly(num) } else { Expr::from_parts(num, den) };
            &acc + &part
        })
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> BigRational {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(acc)
}

pub(crate) fn exp_to_coeff(e: &Exp) -> BigRational {
    BigRational::new(BigInt::from(*e.numer()), BigInt::from(*e.denom()))
}

pub(crate) fn exp_to_f64(e: &Exp) -> f64 {
    *e.numer() as f64 / *e.denom() as f64
}

pub(crate) fn coeff_to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        let n = c.numer().to_f64().unwrap_or(f64::NAN);
        let d = c.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}
