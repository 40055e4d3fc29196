//! Printing in the input syntax; `parse(print(e))` reproduces `e`.

use std::fmt;

use num_traits::{One, Signed};

use super::{Atom, Coeff, Exp, Expr, Monomial, Poly, Var};

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X => write!(f, "x"),
            Var::U(0) => write!(f, "u"),
            Var::U(j) => write!(f, "u{j}"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => write!(f, "{v}"),
            Atom::Target(v) => write!(f, "~{v}"),
            Atom::Unit(n) => write!(f, "{n}"),
            Atom::Unknown { name, dt, dx } => {
                write!(f, "{name}")?;
                if dt + dx > 0 {
                    write!(f, "_")?;
                    for _ in 0..*dt {
                        write!(f, "t")?;
                    }
                    for _ in 0..*dx {
                        write!(f, "x")?;
                    }
                }
                Ok(())
            }
            Atom::Func { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Atom::Radical(p) => {
                if p.len() == 1 && p.as_constant().is_some() {
                    write!(f, "{p}")
                } else {
                    write!(f, "({p})")
                }
            }
        }
    }
}

fn fmt_exp(e: &Exp) -> String {
    if e.is_one() {
        String::new()
    } else if e.is_integer() {
        format!("^{}", e.numer())
    } else {
        format!("^({}/{})", e.numer(), e.denom())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        for (i, (a, e)) in self.factors().iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{a}{}", fmt_exp(e))?;
        }
        Ok(())
    }
}

fn fmt_term(m: &Monomial, c: &Coeff, first: bool) -> String {
    let neg = c.is_negative();
    let a = c.abs();
    let body = if m.is_one() {
        a.to_string()
    } else if a.is_one() {
        m.to_string()
    } else {
        format!("{a}*{m}")
    };
    match (first, neg) {
        (true, true) => format!("-{body}"),
        (true, false) => body,
        (false, true) => format!(" - {body}"),
        (false, false) => format!(" + {body}"),
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms().rev().enumerate() {
            write!(f, "{}", fmt_term(m, c, i == 0))?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return write!(f, "{}", self.num);
        }
        let num = self.num.to_string();
        if self.num.len() == 1 {
            write!(f, "{num}")?;
        } else {
            write!(f, "({num})")?;
        }
        let factors: Vec<String> = self
            .den
            .iter()
            .map(|(p, k)| {
                if *k == 1 {
                    format!("({p})")
                } else {
                    format!("({p})^{k}")
                }
            })
            .collect();
        if factors.len() == 1 {
            write!(f, "/{}", factors[0])
        } else {
            write!(f, "/({})", factors.join("*"))
        }
    }
}
