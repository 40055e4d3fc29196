//! Floating-point evaluation and random sample points.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::symbols::Builtin;
use super::{coeff_to_f64, exp_to_f64, Atom, Context, Exp, Expr, Poly, Var};
use crate::error::{Error, Result};

/// A polynomial in `arity` variables used as a stand-in for an opaque function.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleFunction {
    pub arity: usize,
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl SampleFunction {
    pub fn constant(arity: usize, c: f64) -> SampleFunction {
        SampleFunction {
            arity,
            terms: vec![(vec![0; arity], c)],
        }
    }

    /// Univariate polynomial with the given coefficients, lowest degree first.
    pub fn univariate(coeffs: &[f64]) -> SampleFunction {
        SampleFunction {
            arity: 1,
            terms: coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (vec![i as u32], *c))
                .collect(),
        }
    }

    /// Random dense polynomial of total degree at most `degree`, coefficients in [-1, 1].
    pub fn random(rng: &mut ChaCha8Rng, arity: usize, degree: u32) -> SampleFunction {
        let mut terms = Vec::new();
        let mut stack = vec![Vec::new()];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == arity {
                terms.push((prefix, rng.gen_range(-1.0..1.0)));
                continue;
            }
            let used: u32 = prefix.iter().sum();
            for k in 0..=(degree - used) {
                let mut p = prefix.clone();
                p.push(k);
                stack.push(p);
            }
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        SampleFunction { arity, terms }
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(args)
                    .map(|(k, a)| a.powi(*k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn derivative(&self, i: usize) -> SampleFunction {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] > 0)
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2[i] -= 1;
                (e2, c * e[i] as f64)
            })
            .collect::<Vec<_>>();
        if terms.is_empty() {
            return SampleFunction::constant(self.arity, 0.0);
        }
        SampleFunction {
            arity: self.arity,
            terms,
        }
    }
}

/// Values for variables, unit constants, opaque functions and unknown functions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    pub vars: BTreeMap<Var, f64>,
    pub targets: BTreeMap<Var, f64>,
    pub units: BTreeMap<String, f64>,
    pub functions: BTreeMap<String, SampleFunction>,
    /// Unknown coefficient functions of `(t, x)`.
    pub unknowns: BTreeMap<String, SampleFunction>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn with(mut self, v: Var, value: f64) -> Assignment {
        self.vars.insert(v, value);
        self
    }

    pub fn set(&mut self, v: Var, value: f64) {
        self.vars.insert(v, value);
    }
}

fn real_pow(b: f64, e: &Exp) -> Result<f64> {
    if e.is_integer() {
        return Ok(b.powi(e.to_integer() as i32));
    }
    if b >= 0.0 {
        if b == 0.0 && *e.numer() < 0 {
            return Err(Error::DivisionByZero);
        }
        return Ok(b.powf(exp_to_f64(e)));
    }
    if e.denom() % 2 == 0 {
        return Err(Error::NegativeFractionalPower);
    }
    let m = (-b).powf(exp_to_f64(e));
    Ok(if e.numer() % 2 == 0 { m } else { -m })
}

fn eval_atom(a: &Atom, asg: &Assignment) -> Result<f64> {
    let missing = |what: String| Error::Evaluation(format!("{what} has no assigned value"));
    match a {
        Atom::Var(v) => asg
            .vars
            .get(v)
            .copied()
            .ok_or_else(|| missing(format!("variable {v}"))),
        Atom::Target(v) => asg
            .targets
            .get(v)
            .copied()
            .ok_or_else(|| missing(format!("variable ~{v}"))),
        Atom::Unit(n) => asg
            .units
            .get(n)
            .copied()
            .ok_or_else(|| missing(format!("unit {n}"))),
        Atom::Unknown { name, dt, dx } => {
            let mut f = asg
                .unknowns
                .get(name)
                .cloned()
                .ok_or_else(|| missing(format!("unknown function {name}")))?;
            for _ in 0..*dt {
                f = f.derivative(0);
            }
            for _ in 0..*dx {
                f = f.derivative(1);
            }
            let t = eval_atom(&Atom::Var(Var::T), asg)?;
            let x = eval_atom(&Atom::Var(Var::X), asg)?;
            Ok(f.eval(&[t, x]))
        }
        Atom::Func { name, args } => {
            let vals = args
                .iter()
                .map(|e| eval(e, asg))
                .collect::<Result<Vec<f64>>>()?;
            if let Some(b) = Builtin::from_name(name) {
                let v = b.apply(vals[0]);
                if !v.is_finite() {
                    return Err(Error::Evaluation(format!("{name} undefined at {}", vals[0])));
                }
                return Ok(v);
            }
            let f = asg
                .functions
                .get(name)
                .ok_or_else(|| missing(format!("function {name}")))?;
            Ok(f.eval(&vals))
        }
        Atom::Radical(p) => eval_poly(p, asg),
    }
}

fn eval_poly(p: &Poly, asg: &Assignment) -> Result<f64> {
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        let mut v = coeff_to_f64(c);
        for (a, e) in m.factors() {
            let b = eval_atom(a, asg)?;
            if b == 0.0 && *e.numer() < 0 {
                return Err(Error::DivisionByZero);
            }
            v *= real_pow(b, e)?;
        }
        acc += v;
    }
    Ok(acc)
}

/// Evaluates an expression in floating point.
pub fn eval(e: &Expr, asg: &Assignment) -> Result<f64> {
    let n = eval_poly(&e.num, asg)?;
    let mut d = 1.0;
    for (p, k) in &e.den {
        d *= eval_poly(p, asg)?.powi(*k as i32);
    }
    if d == 0.0 {
        return Err(Error::DivisionByZero);
    }
    let v = n / d;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation("non-finite value".into()))
    }
}

impl Expr {
    pub fn eval(&self, asg: &Assignment) -> Result<f64> {
        eval(self, asg)
    }
}

/// Draws random assignments covering every symbol in a set of expressions.
/// Opaque functions get random polynomials consistent with the declared derivative
/// rules: a symbol that is the derivative of another is sampled as the derivative.
pub struct Sampler {
    rng: ChaCha8Rng,
    vars: BTreeSet<Var>,
    targets: BTreeSet<Var>,
    units: BTreeSet<String>,
    unknowns: BTreeSet<String>,
    functions: BTreeMap<String, SampleFunction>,
}

fn collect(e: &Expr, acc: &mut BTreeSet<Atom>) {
    let visit = |p: &Poly, acc: &mut BTreeSet<Atom>| {
        for (m, _) in p.terms() {
            for (a, _) in m.factors() {
                collect_atom(a, acc);
            }
        }
    };
    visit(&e.num, acc);
    for (p, _) in &e.den {
        visit(p, acc);
    }
}

fn collect_atom(a: &Atom, acc: &mut BTreeSet<Atom>) {
    match a {
        Atom::Func { args, .. } => {
            for e in args {
                collect(e, acc);
            }
        }
        Atom::Radical(p) => collect(&Expr::from_poly(p.clone()), acc),
        _ => {}
    }
    acc.insert(a.clone());
}

impl Sampler {
    pub fn new(ctx: &Context, exprs: &[&Expr], seed: u64) -> Sampler {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut atoms = BTreeSet::new();
        for e in exprs {
            collect(e, &mut atoms);
        }
        let mut s = Sampler {
            rng: ChaCha8Rng::seed_from_u64(0),
            vars: BTreeSet::new(),
            targets: BTreeSet::new(),
            units: BTreeSet::new(),
            unknowns: BTreeSet::new(),
            functions: BTreeMap::new(),
        };
        for a in &atoms {
            match a {
                Atom::Var(v) => {
                    s.vars.insert(*v);
                }
                Atom::Target(v) => {
                    s.targets.insert(*v);
                }
                Atom::Unit(n) => {
                    s.units.insert(n.clone());
                }
                Atom::Unknown { name, .. } => {
                    s.vars.insert(Var::T);
                    s.vars.insert(Var::X);
                    s.unknowns.insert(name.clone());
                }
                _ => {}
            }
        }
        s.functions = sample_symbols(ctx, &mut rng);
        s.rng = rng;
        s
    }

    /// A fresh assignment: variables uniform in [0.5, 2], units uniform in {-1, 1}.
    pub fn draw(&mut self) -> Assignment {
        let mut asg = Assignment::new();
        for v in &self.vars {
            let q: i32 = self.rng.gen_range(50..=200);
            asg.vars.insert(*v, q as f64 / 100.0 + self.rng.gen_range(0.0..0.01));
        }
        for v in &self.targets {
            asg.targets
                .insert(*v, self.rng.gen_range(0.5..2.0));
        }
        for u in &self.units {
            let s = if self.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            asg.units.insert(u.clone(), s);
        }
        for g in &self.unknowns {
            let f = SampleFunction::random(&mut self.rng, 2, 4);
            asg.unknowns.insert(g.clone(), f);
        }
        asg.functions = self.functions.clone();
        asg
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Random polynomial stand-ins for every declared opaque symbol.
fn sample_symbols(ctx: &Context, rng: &mut ChaCha8Rng) -> BTreeMap<String, SampleFunction> {
    let syms: Vec<_> = ctx
        .symbols
        .functions()
        .filter(|s| s.builtin.is_none())
        .collect();
    let mut targets = BTreeSet::new();
    for s in &syms {
        for d in s.derivatives.iter().flatten() {
            if d != &s.name {
                targets.insert(d.clone());
            }
        }
    }
    let mut out: BTreeMap<String, SampleFunction> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in &syms {
        if !targets.contains(&s.name) {
            let degree = if s.arity == 1 { 7 } else { 4 };
            out.insert(s.name.clone(), SampleFunction::random(rng, s.arity, degree));
            queue.push_back(s.name.clone());
        }
    }
    while let Some(name) = queue.pop_front() {
        let sym = ctx.symbols.function(&name).unwrap();
        for (i, d) in sym.derivatives.iter().enumerate() {
            if let Some(d) = d {
                if !out.contains_key(d) {
                    let f = out[&name].derivative(i);
                    out.insert(d.clone(), f);
                    queue.push_back(d.clone());
                }
            }
        }
    }
    for s in &syms {
        if !out.contains_key(&s.name) {
            out.insert(s.name.clone(), SampleFunction::random(rng, s.arity, 4));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn examples() {
        let a = Assignment::new().with(Var::U(0), 2.0).with(Var::U(3), 5.0);
        assert_eq!(parse_expr("u^3*u3").unwrap().eval(&a).unwrap(), 40.0);
        let b = Assignment::new().with(Var::X, 3.0).with(Var::U(0), 2.0);
        assert_eq!(parse_expr("x*u^-2").unwrap().eval(&b).unwrap(), 0.75);
        let c = Assignment::new().with(Var::U(1), 3.0).with(Var::U(0), 2.0);
        assert_eq!(parse_expr("u1^2/u").unwrap().eval(&c).unwrap(), 4.5);
    }

    #[test]
    fn errors() {
        let a = Assignment::new().with(Var::U(0), 0.0);
        assert!(matches!(
            parse_expr("1/u").unwrap().eval(&a),
            Err(Error::DivisionByZero)
        ));
        let b = Assignment::new().with(Var::U(0), -1.0);
        assert!(matches!(
            parse_expr("u^(1/2)").unwrap().eval(&b),
            Err(Error::NegativeFractionalPower)
        ));
        assert!(parse_expr("x").unwrap().eval(&b).is_err());
    }

    #[test]
    fn samples_respect_rules() {
        let ctx = Context::kdv_type();
        let mut rng = {
            use rand::SeedableRng;
            ChaCha8Rng::seed_from_u64(3)
        };
        let fs = sample_symbols(&ctx, &mut rng);
        let h = 1e-5;
        let v = 0.7;
        let num = (fs["fh"].eval(&[v + h]) - fs["fh"].eval(&[v - h])) / (2.0 * h);
        assert!((num - fs["f"].eval(&[v])).abs() < 1e-6);
    }
}
