//! Total derivatives, the variational derivative, Fréchet derivatives and the
//! algebra of differential operators `sum c_i D_x^i`.

use std::fmt;
use std::sync::{Arc, Mutex};


use crate::error::{Error, Result};
use crate::expr::{binomial, Ast, Atom, Context, Exp, Expr, Parser, Var};

/// `D_x e = e_x + sum_j u_{j+1} e_{u_j}`.
pub fn total_dx(ctx: &Context, e: &Expr) -> Result<Expr> {
    if let Some(k) = e.max_jet_index() {
        ctx.check_jet(k + 1)?;
    }
    let rule = |a: &Atom| -> Result<Expr> {
        Ok(match a {
            Atom::Var(Var::X) => Expr::one(),
            Atom::Var(Var::U(j)) => Expr::u(j + 1),
            Atom::Unknown { name, dt, dx } => Expr::atom(Atom::Unknown {
                name: name.clone(),
                dt: *dt,
                dx: dx + 1,
            }),
            _ => Expr::zero(),
        })
    };
    e.derive(ctx, &rule)
}

/// `D_x^k e`.
pub fn total_dx_n(ctx: &Context, e: &Expr, k: usize) -> Result<Expr> {
    let mut out = e.clone();
    for _ in 0..k {
        out = total_dx(ctx, &out)?;
    }
    Ok(out)
}

/// An evolution equation `u_t = F` of order at least two.
#[derive(Clone, Debug)]
pub struct EvolutionEquation {
    rhs: Expr,
    order: usize,
    /// `D_x^j F` for `j = 0, 1, ...`, filled on demand.
    prolongation: Arc<Mutex<Vec<Expr>>>,
}

impl PartialEq for EvolutionEquation {
    fn eq(&self, other: &Self) -> bool {
        self.rhs == other.rhs
    }
}

impl EvolutionEquation {
    /// Checks that `F` has order `n >= 2` and depends on `u_n`.
    pub fn new(ctx: &Context, rhs: Expr) -> Result<EvolutionEquation> {
        let n = rhs.order();
        if n < 2 {
            return Err(Error::Precondition(format!(
                "evolution equation must have order at least 2, got {n} for u_t = {rhs}"
            )));
        }
        if rhs.partial(ctx, Var::U(n))?.is_zero() {
            return Err(Error::Precondition(format!("u_t = {rhs} does not depend on u{n}")));
        }
        ctx.check_jet(n)?;
        Ok(EvolutionEquation {
            prolongation: Arc::new(Mutex::new(vec![rhs.clone()])),
            rhs,
            order: n,
        })
    }

    pub fn rhs(&self) -> &Expr {
        &self.rhs
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `D_x^j F`.
    pub fn prolonged(&self, ctx: &Context, j: usize) -> Result<Expr> {
        ctx.check_jet(j + self.order)?;
        let mut cache = self.prolongation.lock().unwrap();
        while cache.len() <= j {
            let next = total_dx(ctx, cache.last().unwrap())?;
            cache.push(next);
        }
        Ok(cache[j].clone())
    }
}

impl fmt::Display for EvolutionEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u_t = {}", self.rhs)
    }
}

/// `D_t e` on solutions: `e_t + sum_j D_x^j(F) e_{u_j}`.
pub fn total_dt(ctx: &Context, e: &Expr, eq: &EvolutionEquation) -> Result<Expr> {
    let k = e.max_jet_index();
    if let Some(k) = k {
        ctx.check_jet(k + eq.order)?;
        for j in 0..=k {
            eq.prolonged(ctx, j)?;
        }
    }
    let pro = eq.prolongation.lock().unwrap().clone();
    let rule = |a: &Atom| -> Result<Expr> {
        Ok(match a {
            Atom::Var(Var::T) => Expr::one(),
            Atom::Var(Var::U(j)) => pro[*j].clone(),
            Atom::Unknown { name, dt, dx } => Expr::atom(Atom::Unknown {
                name: name.clone(),
                dt: dt + 1,
                dx: *dx,
            }),
            _ => Expr::zero(),
        })
    };
    e.derive(ctx, &rule)
}

/// Euler operator `sum_i (-D_x)^i d/du_i`, evaluated Horner style.
pub fn variational(ctx: &Context, e: &Expr) -> Result<Expr> {
    let Some(k) = e.max_jet_index() else {
        return Ok(Expr::zero());
    };
    let mut acc = e.partial(ctx, Var::U(k))?;
    for i in (0..k).rev() {
        let d = total_dx(ctx, &acc)?;
        acc = &e.partial(ctx, Var::U(i))? - &d;
    }
    Ok(acc)
}

/// Linearization `sum_i e_{u_i} D_x^i`.
pub fn frechet(ctx: &Context, e: &Expr) -> Result<DiffOp> {
    let Some(k) = e.max_jet_index() else {
        return Ok(DiffOp::zero());
    };
    let coeffs = (0..=k)
        .map(|i| e.partial(ctx, Var::U(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiffOp::new(coeffs))
}

/// A differential operator `sum_i c_i D_x^i`, coefficients stored to the left.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DiffOp {
    coeffs: Vec<Expr>,
}

impl DiffOp {
    pub fn new(mut coeffs: Vec<Expr>) -> DiffOp {
        while coeffs.last().is_some_and(Expr::is_zero) {
            coeffs.pop();
        }
        DiffOp { coeffs }
    }

    pub fn zero() -> DiffOp {
        DiffOp { coeffs: Vec::new() }
    }

    pub fn identity() -> DiffOp {
        DiffOp::multiplication(Expr::one())
    }

    /// The operator `D_x^k`.
    pub fn dx_pow(k: usize) -> DiffOp {
        let mut c = vec![Expr::zero(); k + 1];
        c[k] = Expr::one();
        DiffOp { coeffs: c }
    }

    /// Multiplication by `c`.
    pub fn multiplication(c: Expr) -> DiffOp {
        DiffOp::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest power of `D_x`; 0 for the zero operator.
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Expr {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn add(&self, other: &DiffOp) -> DiffOp {
        let n = self.coeffs.len().max(other.coeffs.len());
        DiffOp::new((0..n).map(|i| &self.coeff(i) + &other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &DiffOp) -> DiffOp {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DiffOp {
        DiffOp::new(self.coeffs.iter().map(Expr::neg).collect())
    }

    /// `c * P`, multiplication by a function on the left.
    pub fn scale(&self, c: &Expr) -> DiffOp {
        DiffOp::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// `P(e) = sum_i c_i D_x^i e`.
    pub fn apply(&self, ctx: &Context, e: &Expr) -> Result<Expr> {
        let mut acc = Expr::zero();
        let mut d = e.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                d = total_dx(ctx, &d)?;
            }
            if !c.is_zero() {
                acc = &acc + &(c * &d);
            }
        }
        Ok(acc)
    }

    /// `P o Q`, expanded with `D_x^i q = sum_s C(i, s) D_x^{i-s}(q) D_x^s`.
    pub fn compose(&self, ctx: &Context, other: &DiffOp) -> Result<DiffOp> {
        if self.is_zero() || other.is_zero() {
            return Ok(DiffOp::zero());
        }
        let top = self.order() + other.order();
        if top > ctx.nmax {
            return Err(Error::JetOverflow {
                index: top,
                max: ctx.nmax,
            });
        }
        let mut out = vec![Expr::zero(); top + 1];
        for (j, q) in other.coeffs.iter().enumerate() {
            if q.is_zero() {
                continue;
            }
            // derivatives D_x^r q for r up to the order of self
            let mut dq = vec![q.clone()];
            for _ in 0..self.order() {
                let next = total_dx(ctx, dq.last().unwrap())?;
                dq.push(next);
            }
            for (i, p) in self.coeffs.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                for s in 0..=i {
                    let d = &dq[i - s];
                    if d.is_zero() {
                        continue;
                    }
                    let term = (p * d).scale(&binomial(i, s));
                    out[s + j] = &out[s + j] + &term;
                }
            }
        }
        Ok(DiffOp::new(out))
    }

    /// `P^k` under composition.
    pub fn pow(&self, ctx: &Context, k: usize) -> Result<DiffOp> {
        let mut acc = DiffOp::identity();
        for _ in 0..k {
            acc = acc.compose(ctx, self)?;
        }
        Ok(acc)
    }

    /// Formal adjoint `sum_i (-D_x)^i o c_i`.
    pub fn adjoint(&self, ctx: &Context) -> Result<DiffOp> {
        let mut out = vec![Expr::zero(); self.coeffs.len()];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if i % 2 == 0 { Expr::one() } else { Expr::int(-1) };
            let mut d = c.clone();
            for s in (0..=i).rev() {
                // d = D_x^{i-s} c
                let term = (&sign * &d).scale(&binomial(i, s));
                out[s] = &out[s] + &term;
                if s > 0 {
                    d = total_dx(ctx, &d)?;
                }
            }
        }
        Ok(DiffOp::new(out))
    }

    pub fn is_self_adjoint(&self, ctx: &Context) -> Result<bool> {
        Ok(self.adjoint(ctx)?.same_as(self))
    }

    pub fn is_skew_adjoint(&self, ctx: &Context) -> Result<bool> {
        Ok(self.adjoint(ctx)?.same_as(&self.neg()))
    }

    /// Coefficient-wise partial derivative in `t`.
    pub fn partial_t(&self, ctx: &Context) -> Result<DiffOp> {
        Ok(DiffOp::new(
            self.coeffs
                .iter()
                .map(|c| c.partial(ctx, Var::T))
                .collect::<Result<Vec<_>>>()?,
        ))
    }

    /// Exact coefficient-wise equality.
    pub fn same_as(&self, other: &DiffOp) -> bool {
        self.sub(other).is_zero()
    }

    /// True when every coefficient depends on `(t, x)` only.
    pub fn has_tx_coefficients(&self) -> bool {
        self.coeffs.iter().all(|c| !c.has_jet_vars())
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for i in (0..self.coeffs.len()).rev() {
            let c = &self.coeffs[i];
            if c.is_zero() {
                continue;
            }
            let dx = match i {
                0 => String::new(),
                1 => "Dx".to_string(),
                _ => format!("Dx^{i}"),
            };
            let cs = c.to_string();
            let simple = c.numerator().len() == 1 && c.denominator().is_empty();
            let (neg, body) = if simple && cs.starts_with('-') {
                (true, cs[1..].to_string())
            } else {
                (false, cs)
            };
            let body = if !simple && i > 0 { format!("({body})") } else { body };
            let term = if i == 0 {
                body
            } else if body == "1" {
                dx
            } else {
                format!("{body}*{dx}")
            };
            match (first, neg) {
                (true, true) => write!(f, "-{term}")?,
                (true, false) => write!(f, "{term}")?,
                (false, true) => write!(f, " - {term}")?,
                (false, false) => write!(f, " + {term}")?,
            }
            first = false;
        }
        Ok(())
    }
}

fn ast_mentions_dx(a: &Ast) -> bool {
    match a {
        Ast::Num(_) => false,
        Ast::Name { name, .. } => name == "Dx",
        Ast::Call { args, .. } => args.iter().any(ast_mentions_dx),
        Ast::Neg(x) | Ast::Pow(x, _) => ast_mentions_dx(x),
        Ast::Add(x, y) | Ast::Sub(x, y) | Ast::Mul(x, y) | Ast::Div(x, y) => {
            ast_mentions_dx(x) || ast_mentions_dx(y)
        }
    }
}

/// Interprets a syntax tree as an operator: `Dx` is `D_x`, `*` is composition,
/// anything free of `Dx` is a multiplication operator.
pub fn ast_to_diffop(ctx: &Context, a: &Ast) -> Result<DiffOp> {
    if !ast_mentions_dx(a) {
        return Ok(DiffOp::multiplication(a.to_expr(ctx)?));
    }
    Ok(match a {
        Ast::Name { .. } => DiffOp::dx_pow(1),
        Ast::Neg(x) => ast_to_diffop(ctx, x)?.neg(),
        Ast::Add(x, y) => ast_to_diffop(ctx, x)?.add(&ast_to_diffop(ctx, y)?),
        Ast::Sub(x, y) => ast_to_diffop(ctx, x)?.sub(&ast_to_diffop(ctx, y)?),
        Ast::Mul(x, y) => ast_to_diffop(ctx, x)?.compose(ctx, &ast_to_diffop(ctx, y)?)?,
        Ast::Div(x, y) if !ast_mentions_dx(y) => {
            let c = y.to_expr(ctx)?.inverse()?;
            ast_to_diffop(ctx, x)?.scale(&c)
        }
        Ast::Pow(x, e) if e.is_integer() && *e >= Exp::from_integer(0) => {
            ast_to_diffop(ctx, x)?.pow(ctx, e.to_integer() as usize)?
        }
        _ => {
            return Err(Error::Syntax {
                line: 0,
                column: 0,
                message: "operators support +, -, composition, nonnegative integer powers and division by functions".into(),
            })
        }
    })
}

/// Parses an operator such as `x + 3*t*Dx^2`.
pub fn parse_operator(ctx: &Context, text: &str) -> Result<DiffOp> {
    let mut p = Parser::new(text)?;
    let ast = p.parse_expr()?;
    if !p.at_eof() {
        return Err(p.error_here("unexpected input after operator"));
    }
    ast_to_diffop(ctx, &ast)
}
