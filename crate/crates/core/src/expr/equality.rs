//! Expression equality: exact zero test of the canonical difference, backed by a
//! numeric check at random points.

use std::fmt;

use serde::Serialize;

use super::symbols::Builtin;
use super::{Atom, Context, Expr, Poly, Sampler};

/// How a verdict was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EqualityMethod {
    Symbolic,
    Probabilistic,
}

impl fmt::Display for EqualityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EqualityMethod::Symbolic => write!(f, "symbolic"),
            EqualityMethod::Probabilistic => write!(f, "probabilistic"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub equal: bool,
    pub method: EqualityMethod,
    /// Canonical form of the difference.
    pub witness: String,
    /// Set when the numeric check disagrees with the exact one or was inconclusive.
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EqualityOptions {
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Run the numeric check even when the exact verdict is decisive.
    pub guard: bool,
}

impl Default for EqualityOptions {
    fn default() -> Self {
        EqualityOptions {
            samples: 8,
            tolerance: 1e-9,
            seed: 0x5eed,
            guard: true,
        }
    }
}

/// True when exact zero testing is complete for expressions built from these atoms:
/// no radicals of sums, no elementary functions and no nested function applications.
pub(crate) fn in_decidable_fragment(e: &Expr) -> bool {
    fn poly_ok(p: &Poly, nested: bool) -> bool {
        p.terms().all(|(m, _)| {
            m.factors().iter().all(|(a, ex)| match a {
                Atom::Radical(base) => base.as_constant().is_some() && !nested,
                Atom::Unit(_) => ex.is_integer(),
                Atom::Func { name, args } => {
                    !nested
                        && Builtin::from_name(name).is_none()
                        && args.iter().all(|e| expr_ok(e, true))
                }
                _ => true,
            })
        })
    }
    fn expr_ok(e: &Expr, nested: bool) -> bool {
        poly_ok(&e.num, nested) && e.den.iter().all(|(p, _)| poly_ok(p, nested))
    }
    expr_ok(e, false)
}

enum Numeric {
    Agree,
    Disagree(String),
    Inconclusive(String),
}

fn numeric_check(ctx: &Context, a: &Expr, b: &Expr, opts: &EqualityOptions) -> Numeric {
    let mut sampler = Sampler::new(ctx, &[a, b], opts.seed);
    let mut good = 0;
    let mut attempts = 0;
    let mut last_err = String::new();
    while good < opts.samples && attempts < 20 * opts.samples.max(1) {
        attempts += 1;
        let asg = sampler.draw();
        match (a.eval(&asg), b.eval(&asg)) {
            (Ok(va), Ok(vb)) => {
                good += 1;
                let scale = va.abs().max(vb.abs());
                let diff = (va - vb).abs();
                if diff > opts.tolerance * scale && diff > 1e-12 {
                    return Numeric::Disagree(format!(
                        "values differ at a sample point: {va} vs {vb}"
                    ));
                }
            }
            (Err(e), _) | (_, Err(e)) => last_err = e.to_string(),
        }
    }
    if good < opts.samples {
        Numeric::Inconclusive(format!(
            "only {good} of {} sample points evaluated ({last_err})",
            opts.samples
        ))
    } else {
        Numeric::Agree
    }
}

/// Compares two expressions. The exact verdict wins inside the decidable fragment;
/// outside it a nonzero canonical difference is settled numerically.
pub fn equals_with(ctx: &Context, a: &Expr, b: &Expr, opts: &EqualityOptions) -> Verdict {
    let d = a - b;
    let exact = d.is_zero();
    let decidable = in_decidable_fragment(&d);
    let witness = d.to_string();
    if exact && !opts.guard {
        return Verdict {
            equal: true,
            method: EqualityMethod::Symbolic,
            witness,
            diagnostic: None,
        };
    }
    if !exact && decidable && !opts.guard {
        return Verdict {
            equal: false,
            method: EqualityMethod::Symbolic,
            witness,
            diagnostic: None,
        };
    }
    let numeric = numeric_check(ctx, a, b, opts);
    match (exact, decidable, numeric) {
        (true, _, Numeric::Agree) | (false, true, Numeric::Disagree(_)) => Verdict {
            equal: exact,
            method: EqualityMethod::Symbolic,
            witness,
            diagnostic: None,
        },
        (true, _, Numeric::Disagree(m)) => Verdict {
            equal: true,
            method: EqualityMethod::Symbolic,
            witness,
            diagnostic: Some(format!("numeric check disagrees with exact zero: {m}")),
        },
        (false, true, Numeric::Agree) => Verdict {
            equal: false,
            method: EqualityMethod::Symbolic,
            witness,
            diagnostic: Some("numeric check agrees although the exact difference is nonzero".into()),
        },
        (_, true, Numeric::Inconclusive(m)) | (true, false, Numeric::Inconclusive(m)) => Verdict {
            equal: exact,
            method: EqualityMethod::Symbolic,
            witness,
            diagnostic: Some(m),
        },
        (false, false, Numeric::Agree) => Verdict {
            equal: true,
            method: EqualityMethod::Probabilistic,
            witness,
            diagnostic: None,
        },
        (false, false, Numeric::Disagree(_)) => Verdict {
            equal: false,
            method: EqualityMethod::Probabilistic,
            witness,
            diagnostic: None,
        },
        (false, false, Numeric::Inconclusive(m)) => Verdict {
            equal: false,
            method: EqualityMethod::Probabilistic,
            witness,
            diagnostic: Some(m),
        },
    }
}

pub fn equals(ctx: &Context, a: &Expr, b: &Expr) -> Verdict {
    equals_with(ctx, a, b, &EqualityOptions::default())
}

impl Expr {
    /// Equality with the default options; see [`equals_with`].
    pub fn equals(&self, ctx: &Context, other: &Expr) -> bool {
        equals(ctx, self, other).equal
    }

    /// Exact verdict on the canonical difference, no numeric guard.
    pub fn same_as(&self, other: &Expr) -> bool {
        (self - other).is_zero()
    }
}
