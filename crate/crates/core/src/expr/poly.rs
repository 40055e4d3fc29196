//! Sparse Laurent polynomials over expression atoms.
//!
//! A [`Monomial`] is a product of atoms raised to rational exponents. A [`Poly`]
//! maps monomials to exact rational coefficients. Two monomial rewrite rules keep
//! the representation canonical: unit constants satisfy `e^2 = 1`, and radical
//! atoms carry an exponent in the open interval `(0, 1)`, with integral parts
//! folded back into polynomial factors of their base.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use super::Atom;

pub type Coeff = BigRational;
pub type Exp = Ratio<i64>;

/// Upper bound on division steps before an exact-division attempt gives up.
const DIVISION_STEP_LIMIT: usize = 20_000;

/// A product of atoms with nonzero rational exponents, sorted by atom.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Monomial(pub(crate) Vec<(Atom, Exp)>);

/// Result of canonicalising a raw monomial: the canonical monomial plus radical
/// bases whose integral powers must be multiplied into, or divided out of, the term.
pub(crate) struct Reduced {
    pub mono: Monomial,
    pub mul: Vec<(Poly, u32)>,
    pub div: Vec<(Poly, u32)>,
}

impl Ord for Monomial {
    /// Lexicographic order on exponent vectors, atoms visited in ascending order.
    /// Compatible with multiplication, which exact division relies on.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some((_, e)), None) => return sign_order(e),
                (None, Some((_, f))) => return sign_order(f).reverse(),
                (Some((x, e)), Some((y, f))) => match x.cmp(y) {
                    Ordering::Equal => {
                        if e != f {
                            return e.cmp(f);
                        }
                        i += 1;
                        j += 1;
                    }
                    Ordering::Less => return sign_order(e),
                    Ordering::Greater => return sign_order(f).reverse(),
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn sign_order(e: &Exp) -> Ordering {
    if *e > Exp::zero() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(atom: Atom, exp: Exp) -> Self {
        if exp.is_zero() {
            Monomial::one()
        } else {
            Monomial(vec![(atom, exp)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, Exp)] {
        &self.0
    }

    pub fn exponent(&self, atom: &Atom) -> Exp {
        self.0
            .binary_search_by(|(a, _)| a.cmp(atom))
            .map(|i| self.0[i].1)
            .unwrap_or_else(|_| Exp::zero())
    }

    /// Product without applying the unit or radical rewrite rules.
    pub(crate) fn mul_raw(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some((x, e)), Some((y, f))) => match x.cmp(y) {
                    Ordering::Less => {
                        out.push((x.clone(), *e));
                        i += 1;
                    }
                    Ordering::Greater => {
                        out.push((y.clone(), *f));
                        j += 1;
                    }
                    Ordering::Equal => {
                        let s = e + f;
                        if !s.is_zero() {
                            out.push((x.clone(), s));
                        }
                        i += 1;
                        j += 1;
                    }
                },
                (Some(p), None) => {
                    out.push(p.clone());
                    i += 1;
                }
                (None, Some(p)) => {
                    out.push(p.clone());
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Monomial(out)
    }

    pub(crate) fn pow_raw(&self, r: Exp) -> Monomial {
        if r.is_zero() {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(a, e)| (a.clone(), e * r)).collect())
    }

    pub(crate) fn div_raw(&self, other: &Monomial) -> Monomial {
        self.mul_raw(&other.pow_raw(-Exp::one()))
    }

    /// True when unit exponents are 1 (or non-integral) and radical exponents lie in (0, 1).
    pub(crate) fn is_canonical(&self) -> bool {
        self.0.iter().all(|(a, e)| match a {
            Atom::Unit(_) => !e.is_integer() || *e == Exp::one(),
            Atom::Radical(_) => *e > Exp::zero() && *e < Exp::one(),
            _ => true,
        })
    }

    pub(crate) fn reduce(self) -> Reduced {
        let mut mono = Vec::with_capacity(self.0.len());
        let mut mul = Vec::new();
        let mut div = Vec::new();
        for (a, e) in self.0 {
            match &a {
                Atom::Unit(_) if e.is_integer() => {
                    if e.to_integer().rem_euclid(2) == 1 {
                        mono.push((a, Exp::one()));
                    }
                }
                Atom::Radical(base) => {
                    let fl = e.floor();
                    let frac = e - fl;
                    let k = fl.to_integer();
                    if k > 0 {
                        mul.push((base.clone(), k as u32));
                    } else if k < 0 {
                        div.push((base.clone(), (-k) as u32));
                    }
                    if !frac.is_zero() {
                        mono.push((a, frac));
                    }
                }
                _ => mono.push((a, e)),
            }
        }
        Reduced {
            mono: Monomial(mono),
            mul,
            div,
        }
    }

    /// Total integral degree in the atoms accepted by `pred`.
    pub fn degree_in(&self, pred: impl Fn(&Atom) -> bool) -> Exp {
        self.0
            .iter()
            .filter(|(a, _)| pred(a))
            .fold(Exp::zero(), |acc, (_, e)| acc + e)
    }

    /// Splits into the part built from atoms accepted by `pred` and the rest.
    pub fn split(&self, pred: impl Fn(&Atom) -> bool) -> (Monomial, Monomial) {
        let (yes, no): (Vec<_>, Vec<_>) = self.0.iter().cloned().partition(|(a, _)| pred(a));
        (Monomial(yes), Monomial(no))
    }
}

/// Sparse polynomial with rational coefficients and canonical monomials.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Poly {
    pub(crate) terms: BTreeMap<Monomial, Coeff>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Poly::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn leading(&self) -> Option<(&Monomial, &Coeff)> {
        self.terms.iter().next_back()
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (big, small) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub(crate) fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, k: &Coeff) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    /// Builds a polynomial from a raw monomial whose radical exponents are nonnegative.
    pub(crate) fn canonical_term(m: Monomial, c: Coeff) -> Poly {
        if m.is_canonical() {
            return Poly::term(m, c);
        }
        let red = m.reduce();
        debug_assert!(red.div.is_empty(), "negative radical exponent in polynomial product");
        let mut p = Poly::term(red.mono, c);
        for (base, k) in red.mul {
            for _ in 0..k {
                p = p.mul(&base);
            }
        }
        p
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let mut out = Poly::zero();
        let mut raw = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul_raw(mb);
                if m.is_canonical() {
                    raw.add_term(m, ca * cb);
                } else {
                    out.add_assign(&Poly::canonical_term(m, ca * cb));
                }
            }
        }
        out.add(&raw)
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Decomposes `self = c * m * p` with `p` monic (leading coefficient 1) and free of
    /// monomial factors. Returns zero content for the zero polynomial.
    pub fn split_content(&self) -> (Coeff, Monomial, Poly) {
        if self.is_zero() {
            return (Coeff::zero(), Monomial::one(), Poly::zero());
        }
        let gcd = self.monomial_gcd();
        let (_, lc) = self.leading().unwrap();
        let lc = lc.clone();
        let inv_gcd = gcd.pow_raw(-Exp::one());
        let mut p = Poly::zero();
        for (m, c) in &self.terms {
            p.add_term(m.mul_raw(&inv_gcd), c / &lc);
        }
        (lc, gcd, p)
    }

    /// Monomial with the least exponent of every atom across all terms.
    pub fn monomial_gcd(&self) -> Monomial {
        let mut mins: BTreeMap<&Atom, Exp> = BTreeMap::new();
        let n = self.terms.len();
        let mut counts: BTreeMap<&Atom, usize> = BTreeMap::new();
        for m in self.terms.keys() {
            for (a, e) in &m.0 {
                *counts.entry(a).or_default() += 1;
                mins.entry(a)
                    .and_modify(|x| {
                        if *e < *x {
                            *x = *e
                        }
                    })
                    .or_insert(*e);
            }
        }
        let mut out = Vec::new();
        for (a, e) in mins {
            let e = if counts[a] < n && e > Exp::zero() {
                Exp::zero()
            } else {
                e
            };
            if !e.is_zero() {
                out.push((a.clone(), e));
            }
        }
        Monomial(out)
    }

    fn exponent_bounds(&self) -> BTreeMap<Atom, (Exp, Exp)> {
        let mut b: BTreeMap<Atom, (Exp, Exp)> = BTreeMap::new();
        let n = self.terms.len();
        let mut counts: BTreeMap<&Atom, usize> = BTreeMap::new();
        for m in self.terms.keys() {
            for (a, e) in &m.0 {
                *counts.entry(a).or_default() += 1;
                b.entry(a.clone())
                    .and_modify(|(lo, hi)| {
                        if e < lo {
                            *lo = *e
                        }
                        if e > hi {
                            *hi = *e
                        }
                    })
                    .or_insert((*e, *e));
            }
        }
        for (a, (lo, hi)) in b.iter_mut() {
            if counts[a] < n {
                if *lo > Exp::zero() {
                    *lo = Exp::zero();
                }
                if *hi < Exp::zero() {
                    *hi = Exp::zero();
                }
            }
        }
        b
    }

    /// Exact division in the free Laurent ring over the atoms. Returns `None` when
    /// `divisor` does not divide `self` (or the attempt exceeds the step budget).
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if self.len() == 1 {
            // the leading and trailing terms of a product never cancel
            return None;
        }
        let nb = self.exponent_bounds();
        let db = divisor.exponent_bounds();
        let mut bounds: BTreeMap<Atom, (Exp, Exp)> = BTreeMap::new();
        let zero = (Exp::zero(), Exp::zero());
        for a in nb.keys().chain(db.keys()) {
            let (nlo, nhi) = nb.get(a).copied().unwrap_or(zero);
            let (dlo, dhi) = db.get(a).copied().unwrap_or(zero);
            let (lo, hi) = (nlo - dlo, nhi - dhi);
            if lo > hi {
                return None;
            }
            bounds.insert(a.clone(), (lo, hi));
        }
        let (dm, dc) = divisor.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        let mut steps = 0;
        while let Some((rm, rc)) = rem.leading() {
            steps += 1;
            if steps > DIVISION_STEP_LIMIT {
                return None;
            }
            let qm = rm.div_raw(&dm);
            for (a, (lo, hi)) in &bounds {
                let e = qm.exponent(a);
                if e < *lo || e > *hi {
                    return None;
                }
            }
            if qm.0.iter().any(|(a, _)| !bounds.contains_key(a)) {
                return None;
            }
            let qc = rc / &dc;
            for (m, c) in &divisor.terms {
                rem.add_term(qm.mul_raw(m), -(&qc * c));
            }
            quot.add_term(qm, qc);
        }
        if quot.terms.keys().all(|m| m.is_canonical()) {
            Some(quot)
        } else {
            None
        }
    }

    /// Coefficient table of the numerator: monomial -> coefficient.
    pub fn coefficients(&self) -> &BTreeMap<Monomial, Coeff> {
        &self.terms
    }
}
