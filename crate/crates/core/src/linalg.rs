//! Exact sparse linear algebra over the rationals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::{Coeff, Expr, Monomial, Poly};

pub type SparseRow = BTreeMap<usize, BigRational>;

/// Row echelon form built incrementally; rows are keyed by pivot column and
/// normalised to a unit pivot.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    ncols: usize,
    pivots: BTreeMap<usize, SparseRow>,
}

fn axpy(row: &mut SparseRow, a: &BigRational, other: &SparseRow) {
    for (c, v) in other {
        let entry = row.entry(*c).or_insert_with(BigRational::zero);
        *entry -= a * v;
        if entry.is_zero() {
            row.remove(c);
        }
    }
}

impl Echelon {
    pub fn new(ncols: usize) -> Echelon {
        Echelon {
            ncols,
            pivots: BTreeMap::new(),
        }
    }

    /// Reduces `row` by the current pivots.
    fn reduce(&self, mut row: SparseRow) -> SparseRow {
        let mut cursor = 0;
        loop {
            let next = row.range(cursor..).find(|(c, _)| self.pivots.contains_key(c)).map(|(c, v)| (*c, v.clone()));
            let Some((c, a)) = next else { break };
            axpy(&mut row, &a, &self.pivots[&c]);
            cursor = c + 1;
        }
        row
    }

    /// Adds a row; returns true when it increased the rank.
    pub fn push(&mut self, row: SparseRow) -> bool {
        debug_assert!(row.keys().all(|c| *c < self.ncols));
        let row = self.reduce(row);
        let Some((&c, lead)) = row.iter().next() else {
            return false;
        };
        let inv = lead.recip();
        let row: SparseRow = row.into_iter().map(|(k, v)| (k, v * &inv)).collect();
        self.pivots.insert(c, row);
        true
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// True when `row` lies in the row space.
    pub fn contains(&self, row: SparseRow) -> bool {
        self.reduce(row).is_empty()
    }

    /// Basis of `{c : M c = 0}`.
    pub fn nullspace(&self) -> Vec<Vec<BigRational>> {
        let mut rref = self.pivots.clone();
        let cols: Vec<usize> = rref.keys().rev().copied().collect();
        for c in cols {
            let mut row = rref.remove(&c).expect("pivot row");
            let later: Vec<(usize, BigRational)> = row
                .range(c + 1..)
                .filter(|(d, _)| rref.contains_key(d))
                .map(|(d, v)| (*d, v.clone()))
                .collect();
            for (d, a) in later {
                axpy(&mut row, &a, &rref[&d]);
            }
            rref.insert(c, row);
        }
        let mut out = Vec::new();
        for f in (0..self.ncols).filter(|c| !rref.contains_key(c)) {
            let mut v = vec![BigRational::zero(); self.ncols];
            v[f] = BigRational::one();
            for (p, row) in &rref {
                if let Some(a) = row.get(&f) {
                    v[*p] = -a.clone();
                }
            }
            out.push(v);
        }
        out
    }
}

/// Scales to coprime integers with the first nonzero entry positive.
pub fn primitive(v: &mut [BigRational]) {
    let mut den = BigInt::one();
    for x in v.iter() {
        den = den.lcm(x.denom());
    }
    let mut g = BigInt::zero();
    for x in v.iter() {
        let n = x.numer() * (&den / x.denom());
        g = g.gcd(&n);
    }
    if g.is_zero() {
        return;
    }
    let sign = v.iter().find(|x| !x.is_zero()).map(|x| x.is_negative()).unwrap_or(false);
    let scale = BigRational::new(if sign { -den } else { den }, g);
    for x in v.iter_mut() {
        *x = &*x * &scale;
    }
}

/// Brings a family of expressions to polynomials over one common denominator.
pub fn common_numerators(exprs: &[Expr]) -> Result<Vec<Poly>> {
    let mut factors: Vec<(Poly, u32)> = Vec::new();
    for e in exprs {
        for (p, k) in e.denominator() {
            match factors.iter_mut().find(|(q, _)| q == p) {
                Some((_, j)) => *j = (*j).max(*k),
                None => factors.push((p.clone(), *k)),
            }
        }
    }
    let mut common = Poly::one();
    for (p, k) in &factors {
        common = common.mul(&p.pow(*k));
    }
    let common = Expr::from_poly(common);
    exprs
        .iter()
        .map(|e| {
            let n = e * &common;
            if n.denominator().is_empty() {
                Ok(n.numerator().clone())
            } else {
                Err(Error::Internal(format!("no common denominator for {e}")))
            }
        })
        .collect()
}

/// Coefficient rows (one per monomial) of the map `c -> sum c_i p_i`.
pub fn coefficient_rows(polys: &[Poly]) -> Vec<SparseRow> {
    let mut rows: BTreeMap<Monomial, SparseRow> = BTreeMap::new();
    for (i, p) in polys.iter().enumerate() {
        for (m, c) in p.terms() {
            rows.entry(m.clone()).or_default().insert(i, c.clone());
        }
    }
    rows.into_values().collect()
}

/// Basis of the constant vectors `c` with `sum c_i e_i = 0`, with monomials in
/// distinct atoms treated as independent. Every returned relation is exact.
pub fn linear_relations(exprs: &[Expr]) -> Result<Vec<Vec<Coeff>>> {
    let polys = common_numerators(exprs)?;
    let mut ech = Echelon::new(exprs.len());
    for row in coefficient_rows(&polys) {
        ech.push(row);
    }
    let mut basis = ech.nullspace();
    for v in basis.iter_mut() {
        primitive(v);
    }
    Ok(basis)
}

/// Rank of a family of expressions as vectors of monomial coefficients.
pub fn expr_rank(exprs: &[Expr]) -> Result<usize> {
    Ok(exprs.len() - linear_relations(exprs)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn kernel_of_small_matrix() {
        let mut e = Echelon::new(3);
        e.push([(0, q(1)), (1, q(2)), (2, q(3))].into_iter().collect());
        e.push([(0, q(2)), (1, q(4)), (2, q(6))].into_iter().collect());
        e.push([(1, q(1)), (2, q(1))].into_iter().collect());
        assert_eq!(e.rank(), 2);
        let ns = e.nullspace();
        assert_eq!(ns.len(), 1);
        let mut v = ns[0].clone();
        primitive(&mut v);
        assert_eq!(v, vec![q(1), q(1), q(-1)]);
    }

    #[test]
    fn relations_between_expressions() {
        let es: Vec<Expr> = ["x/(1+x)", "1/(1+x)", "1", "x^2"]
            .iter()
            .map(|s| parse_expr(s).unwrap())
            .collect();
        let rel = linear_relations(&es).unwrap();
        assert_eq!(rel, vec![vec![q(1), q(1), q(-1), q(0)]]);
        assert_eq!(expr_rank(&es).unwrap(), 3);
    }
}
