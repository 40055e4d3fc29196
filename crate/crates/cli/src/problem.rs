//! Problem-file language.
//!
//! ```text
//! function f(u), g(t, x);          # opaque functions
//! derivative fc(u) = fh;           # d fc / du = fh
//! unit eps, pm;                    # constants with e^2 = 1
//! equation u_t = u3 + u*u1;        # or: operator = Dx^3 + x;
//! density rho1 = u^2/2;
//! conserved cv { density = u; flux = -u2 - u^2/2; }
//! transform h { T = t; X = u; U = x; inverse { T = t; X = u; U = x; } }
//! pair p { rho1 = u; rho2 = u^2/2; U = -x; }
//! multiplier v = x;
//! gamma g = x + 3*t*Dx^2;
//! basis { u, u^2, x*u };
//! set r = 4;
//! expect characteristic rho1 = u;
//! ```

use std::collections::{BTreeMap, BTreeSet};

use conservkit::error::{Error, Result};
use conservkit::expr::{Ast, Parser, TokenKind};
use conservkit::jet::{ast_to_diffop, DiffOp, EvolutionEquation};
use conservkit::linear::LinearOperator;
use conservkit::{Context, Expr};

#[derive(Clone, Debug)]
pub struct Item {
    pub name: String,
    pub line: usize,
    pub kind: ItemKind,
}

#[derive(Clone, Debug)]
pub enum ItemKind {
    Density(Expr),
    Conserved { rho: Expr, sigma: Expr },
    Transform { map: [Expr; 3], inverse: Option<[Expr; 3]> },
    Pair { rho1: Expr, rho2: Expr, u: Option<Expr> },
    Multiplier(Expr),
    Gamma(DiffOp),
}

impl ItemKind {
    pub fn label(&self) -> &'static str {
        match self {
            ItemKind::Density(_) => "density",
            ItemKind::Conserved { .. } => "conserved",
            ItemKind::Transform { .. } => "transform",
            ItemKind::Pair { .. } => "pair",
            ItemKind::Multiplier(_) => "multiplier",
            ItemKind::Gamma(_) => "gamma",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Expect {
    pub line: usize,
    pub negated: bool,
    pub check: Check,
}

#[derive(Clone, Debug)]
pub enum Check {
    Verified(String),
    Trivial(String),
    Characteristic(String, Expr),
    Order(String, usize),
    /// Transformed right-hand side, written as an operator applied to 1.
    Transformed(String, Expr),
    Pushed { transform: String, law: String, characteristic: Option<Expr> },
    PairX(String, Expr),
    PairU(String, Expr),
    Flux(String, Expr),
    Dimension(usize),
    JetFree,
    Gamma(String),
    Adjoint(DiffOp),
}

impl Check {
    pub fn describe(&self) -> String {
        match self {
            Check::Verified(n) => format!("verified {n}"),
            Check::Trivial(n) => format!("trivial {n}"),
            Check::Characteristic(n, e) => format!("characteristic {n} = {e}"),
            Check::Order(n, k) => format!("order {n} = {k}"),
            Check::Transformed(n, e) => format!("transformed {n} = {e}"),
            Check::Pushed { transform, law, characteristic: Some(c) } => {
                format!("pushed {transform} {law} characteristic = {c}")
            }
            Check::Pushed { transform, law, characteristic: None } => format!("pushed {transform} {law}"),
            Check::PairX(n, e) => format!("pair {n} X = {e}"),
            Check::PairU(n, e) => format!("pair {n} U = {e}"),
            Check::Flux(n, e) => format!("flux {n} = {e}"),
            Check::Dimension(k) => format!("dimension = {k}"),
            Check::JetFree => "jet_free".into(),
            Check::Gamma(n) => format!("gamma {n}"),
            Check::Adjoint(op) => format!("adjoint = {op}"),
        }
    }
}

#[derive(Debug)]
pub struct Problem {
    pub ctx: Context,
    pub equation: Option<EvolutionEquation>,
    pub operator: Option<LinearOperator>,
    pub items: Vec<Item>,
    pub basis: Option<Vec<Expr>>,
    pub settings: BTreeMap<String, i64>,
    pub expects: Vec<Expect>,
}

impl Problem {
    pub fn equation(&self) -> Result<&EvolutionEquation> {
        self.equation
            .as_ref()
            .ok_or_else(|| Error::Problem("no `equation` or `operator` statement".into()))
    }

    pub fn item(&self, name: &str) -> Result<&Item> {
        self.items
            .iter()
            .find(|i| i.name == name)
            .ok_or_else(|| Error::Problem(format!("no item named `{name}`")))
    }

    pub fn setting(&self, key: &str) -> Option<i64> {
        self.settings.get(key).copied()
    }
}

fn at_line(line: usize, e: Error) -> Error {
    match e {
        Error::Syntax { .. } => e,
        other => Error::Problem(format!("line {line}: {other}")),
    }
}

struct Reader {
    p: Parser,
    ctx: Context,
    names: BTreeSet<String>,
}

impl Reader {
    fn line(&self) -> usize {
        self.p.peek().line
    }

    fn ident_is(&self, word: &str) -> bool {
        matches!(&self.p.peek().kind, TokenKind::Ident(s) if s == word)
    }

    fn semi(&mut self) -> Result<()> {
        self.p.expect(&TokenKind::Semicolon).map(|_| ())
    }

    fn expr(&mut self) -> Result<Expr> {
        let line = self.line();
        let ast = self.p.parse_expr()?;
        ast.to_expr(&self.ctx).map_err(|e| at_line(line, e))
    }

    fn operator(&mut self) -> Result<DiffOp> {
        let line = self.line();
        let ast: Ast = self.p.parse_expr()?;
        ast_to_diffop(&self.ctx, &ast).map_err(|e| at_line(line, e))
    }

    fn integer(&mut self) -> Result<i64> {
        let neg = self.p.eat(&TokenKind::Minus);
        match self.p.peek().kind.clone() {
            TokenKind::Number(n) => {
                self.p.next_token();
                let v: i64 = n
                    .try_into()
                    .map_err(|_| self.p.error_here("integer out of range"))?;
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.p.error_here("expected an integer")),
        }
    }

    fn count(&mut self) -> Result<usize> {
        let v = self.integer()?;
        usize::try_from(v).map_err(|_| self.p.error_here("expected a nonnegative integer"))
    }

    fn fresh_name(&mut self) -> Result<String> {
        let line = self.line();
        let name = self.p.expect_ident()?;
        if !self.names.insert(name.clone()) {
            return Err(Error::Problem(format!("line {line}: `{name}` is defined twice")));
        }
        Ok(name)
    }

    /// `key = expr;`
    fn field(&mut self, key: &str) -> Result<Expr> {
        self.p.expect_keyword(key)?;
        self.p.expect(&TokenKind::Equals)?;
        let e = self.expr()?;
        self.semi()?;
        Ok(e)
    }

    fn triple(&mut self) -> Result<[Expr; 3]> {
        Ok([self.field("T")?, self.field("X")?, self.field("U")?])
    }

    fn functions(&mut self) -> Result<()> {
        loop {
            let line = self.line();
            let name = self.p.expect_ident()?;
            self.p.expect(&TokenKind::LParen)?;
            let mut params = vec![self.p.expect_ident()?];
            while self.p.eat(&TokenKind::Comma) {
                params.push(self.p.expect_ident()?);
            }
            self.p.expect(&TokenKind::RParen)?;
            let refs: Vec<&str> = params.iter().map(String::as_str).collect();
            self.ctx
                .symbols
                .declare_function(&name, &refs)
                .map_err(|e| at_line(line, e))?;
            if !self.p.eat(&TokenKind::Comma) {
                return self.semi();
            }
        }
    }

    fn derivative(&mut self) -> Result<()> {
        let line = self.line();
        let name = self.p.expect_ident()?;
        self.p.expect(&TokenKind::LParen)?;
        let param = self.p.expect_ident()?;
        self.p.expect(&TokenKind::RParen)?;
        self.p.expect(&TokenKind::Equals)?;
        let target = self.p.expect_ident()?;
        self.semi()?;
        let sym = self
            .ctx
            .symbols
            .function(&name)
            .ok_or_else(|| at_line(line, Error::UnknownSymbol(name.clone())))?;
        let arg = sym
            .params
            .iter()
            .position(|p| *p == param)
            .ok_or_else(|| Error::Problem(format!("line {line}: `{name}` has no parameter `{param}`")))?;
        self.ctx
            .symbols
            .add_rule(&name, arg, &target)
            .map_err(|e| at_line(line, e))
    }

    fn units(&mut self) -> Result<()> {
        loop {
            let line = self.line();
            let name = self.p.expect_ident()?;
            self.ctx.symbols.declare_unit(&name).map_err(|e| at_line(line, e))?;
            if !self.p.eat(&TokenKind::Comma) {
                return self.semi();
            }
        }
    }

    fn expect_stmt(&mut self) -> Result<Expect> {
        let line = self.line();
        let negated = if self.ident_is("not") {
            self.p.next_token();
            true
        } else {
            false
        };
        let word = self.p.expect_ident()?;
        let known = |r: &Self, n: &str| -> Result<()> {
            if r.names.contains(n) {
                Ok(())
            } else {
                Err(Error::Problem(format!("line {line}: no item named `{n}`")))
            }
        };
        let check = match word.as_str() {
            "verified" | "trivial" | "gamma" => {
                let n = self.p.expect_ident()?;
                known(self, &n)?;
                match word.as_str() {
                    "verified" => Check::Verified(n),
                    "trivial" => Check::Trivial(n),
                    _ => Check::Gamma(n),
                }
            }
            "characteristic" | "flux" => {
                let n = self.p.expect_ident()?;
                known(self, &n)?;
                self.p.expect(&TokenKind::Equals)?;
                let e = self.expr()?;
                if word == "flux" {
                    Check::Flux(n, e)
                } else {
                    Check::Characteristic(n, e)
                }
            }
            "order" => {
                let n = self.p.expect_ident()?;
                known(self, &n)?;
                self.p.expect(&TokenKind::Equals)?;
                Check::Order(n, self.count()?)
            }
            "transformed" => {
                let n = self.p.expect_ident()?;
                known(self, &n)?;
                self.p.expect(&TokenKind::Equals)?;
                let op = self.operator()?;
                let e = op.apply(&self.ctx, &Expr::one()).map_err(|e| at_line(line, e))?;
                Check::Transformed(n, e)
            }
            "pushed" => {
                let transform = self.p.expect_ident()?;
                known(self, &transform)?;
                let law = self.p.expect_ident()?;
                known(self, &law)?;
                let characteristic = if self.ident_is("characteristic") {
                    self.p.next_token();
                    self.p.expect(&TokenKind::Equals)?;
                    Some(self.expr()?)
                } else {
                    None
                };
                Check::Pushed {
                    transform,
                    law,
                    characteristic,
                }
            }
            "pair" => {
                let n = self.p.expect_ident()?;
                known(self, &n)?;
                let which = self.p.expect_ident()?;
                self.p.expect(&TokenKind::Equals)?;
                let e = self.expr()?;
                match which.as_str() {
                    "X" => Check::PairX(n, e),
                    "U" => Check::PairU(n, e),
                    _ => return Err(Error::Problem(format!("line {line}: expected `X` or `U`"))),
                }
            }
            "dimension" => {
                self.p.expect(&TokenKind::Equals)?;
                Check::Dimension(self.count()?)
            }
            "jet_free" => Check::JetFree,
            "adjoint" => {
                self.p.expect(&TokenKind::Equals)?;
                Check::Adjoint(self.operator()?)
            }
            other => {
                return Err(Error::Problem(format!("line {line}: unknown expectation `{other}`")));
            }
        };
        self.semi()?;
        Ok(Expect { line, negated, check })
    }
}

/// Parses a problem file, resolving names against `ctx` extended by the file's
/// declarations. Declarations must precede their use.
pub fn parse_problem(text: &str, ctx: Context) -> Result<Problem> {
    let mut r = Reader {
        p: Parser::new(text)?,
        ctx,
        names: BTreeSet::new(),
    };
    let mut prob = Problem {
        ctx: Context::new(),
        equation: None,
        operator: None,
        items: Vec::new(),
        basis: None,
        settings: BTreeMap::new(),
        expects: Vec::new(),
    };
    while !r.p.at_eof() {
        let line = r.line();
        let word = r.p.expect_ident()?;
        let kind = match word.as_str() {
            "function" => {
                r.functions()?;
                None
            }
            "derivative" => {
                r.derivative()?;
                None
            }
            "unit" => {
                r.units()?;
                None
            }
            "equation" | "operator" => {
                if prob.equation.is_some() {
                    return Err(Error::Problem(format!("line {line}: second equation")));
                }
                if word == "equation" {
                    r.p.expect_keyword("u_t")?;
                    r.p.expect(&TokenKind::Equals)?;
                    let rhs = r.expr()?;
                    r.semi()?;
                    prob.equation = Some(EvolutionEquation::new(&r.ctx, rhs).map_err(|e| at_line(line, e))?);
                } else {
                    r.p.expect(&TokenKind::Equals)?;
                    let op = r.operator()?;
                    r.semi()?;
                    let lin = LinearOperator::new(op).map_err(|e| at_line(line, e))?;
                    prob.equation = Some(lin.equation(&r.ctx).map_err(|e| at_line(line, e))?);
                    prob.operator = Some(lin);
                }
                None
            }
            "density" | "multiplier" => {
                let name = r.fresh_name()?;
                r.p.expect(&TokenKind::Equals)?;
                let e = r.expr()?;
                r.semi()?;
                Some((
                    name,
                    if word == "density" {
                        ItemKind::Density(e)
                    } else {
                        ItemKind::Multiplier(e)
                    },
                ))
            }
            "gamma" => {
                let name = r.fresh_name()?;
                r.p.expect(&TokenKind::Equals)?;
                let op = r.operator()?;
                r.semi()?;
                Some((name, ItemKind::Gamma(op)))
            }
            "conserved" => {
                let name = r.fresh_name()?;
                r.p.expect(&TokenKind::LBrace)?;
                let rho = r.field("density")?;
                let sigma = r.field("flux")?;
                r.p.expect(&TokenKind::RBrace)?;
                Some((name, ItemKind::Conserved { rho, sigma }))
            }
            "transform" => {
                let name = r.fresh_name()?;
                r.p.expect(&TokenKind::LBrace)?;
                let map = r.triple()?;
                let inverse = if r.ident_is("inverse") {
                    r.p.next_token();
                    r.p.expect(&TokenKind::LBrace)?;
                    let inv = r.triple()?;
                    r.p.expect(&TokenKind::RBrace)?;
                    Some(inv)
                } else {
                    None
                };
                r.p.expect(&TokenKind::RBrace)?;
                Some((name, ItemKind::Transform { map, inverse }))
            }
            "pair" => {
                let name = r.fresh_name()?;
                r.p.expect(&TokenKind::LBrace)?;
                let rho1 = r.field("rho1")?;
                let rho2 = r.field("rho2")?;
                let u = if r.ident_is("U") { Some(r.field("U")?) } else { None };
                r.p.expect(&TokenKind::RBrace)?;
                Some((name, ItemKind::Pair { rho1, rho2, u }))
            }
            "basis" => {
                r.p.expect(&TokenKind::LBrace)?;
                let mut terms = Vec::new();
                if !r.p.at(&TokenKind::RBrace) {
                    terms.push(r.expr()?);
                    while r.p.eat(&TokenKind::Comma) {
                        terms.push(r.expr()?);
                    }
                }
                r.p.expect(&TokenKind::RBrace)?;
                r.p.eat(&TokenKind::Semicolon);
                prob.basis.get_or_insert_with(Vec::new).extend(terms);
                None
            }
            "set" => {
                let key = r.p.expect_ident()?;
                r.p.expect(&TokenKind::Equals)?;
                let v = r.integer()?;
                r.semi()?;
                prob.settings.insert(key, v);
                None
            }
            "expect" => {
                let e = r.expect_stmt()?;
                prob.expects.push(e);
                None
            }
            other => {
                return Err(Error::Syntax {
                    line,
                    column: 1,
                    message: format!("unknown statement `{other}`"),
                })
            }
        };
        if let Some((name, kind)) = kind {
            prob.items.push(Item { name, line, kind });
        }
    }
    prob.ctx = r.ctx;
    Ok(prob)
}

/// Parses a bare list of basis terms separated by commas, semicolons or newlines.
pub fn parse_basis_list(text: &str, ctx: &Context) -> Result<Vec<Expr>> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        let line = p.peek().line;
        let ast = p.parse_expr()?;
        out.push(ast.to_expr(ctx).map_err(|e| at_line(line, e))?);
        while p.eat(&TokenKind::Comma) || p.eat(&TokenKind::Semicolon) {}
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Problem> {
        parse_problem(text, Context::new())
    }

    #[test]
    fn declarations_and_items() {
        let p = parse(
            "function f(u); derivative f(u) = fp; unit eps;
             equation u_t = u3 + f(u)*u1;
             density d = eps*u;
             transform h { T = t; X = u; U = x; inverse { T = t; X = u; U = x; } }
             basis { u, u^2 }; basis { x*u };
             set r = -3;
             expect not verified d;",
        )
        .unwrap();
        assert_eq!(p.equation().unwrap().order(), 3);
        assert_eq!(p.items.len(), 2);
        assert!(matches!(p.items[1].kind, ItemKind::Transform { inverse: Some(_), .. }));
        assert_eq!(p.basis.as_ref().unwrap().len(), 3);
        assert_eq!(p.setting("r"), Some(-3));
        assert!(p.expects[0].negated);
        assert!(p.ctx.symbols.function("fp").is_some());
    }

    #[test]
    fn operator_statement_defines_the_equation() {
        let p = parse("operator = Dx^3 + x;").unwrap();
        assert!(p.operator.is_some());
        assert!(p.equation().unwrap().rhs().equals(&p.ctx, &conservkit::expr::parse_expr("u3 + x*u").unwrap()));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("equation u_t = u3;\ndensity d = u +;") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let dup = parse("equation u_t = u3; density d = u; density d = u;").unwrap_err();
        assert!(dup.to_string().contains("twice"));
        let unknown = parse("equation u_t = g(u);").unwrap_err();
        assert!(unknown.to_string().contains("line 1"));
        assert!(parse("expect verified nothing;").is_err());
        assert!(parse("equation u_t = u3; equation u_t = u2;").is_err());
    }

    #[test]
    fn basis_lists() {
        let b = parse_basis_list("u, x*u\nu^2; u1^2", &Context::new()).unwrap();
        assert_eq!(b.len(), 4);
    }
}
