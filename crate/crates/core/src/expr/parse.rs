//! Lexer and recursive-descent parser for the expression language.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' exponent)?
//! base   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! exponent := '-'? digits | '(' '-'? digits ('/' digits)? ')'
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::{Context, Exp, Expr, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Number(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semicolon,
    Equals,
    Eof,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Semicolon => "`;`".into(),
            TokenKind::Equals => "`=`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

/// Splits UTF-8 text into tokens; `#` starts a comment running to the end of line.
pub struct Lexer;

impl Lexer {
    pub fn tokenize(text: &str) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        let chars: Vec<char> = text.chars().collect();
        let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
        while i < chars.len() {
            let c = chars[i];
            let (l0, c0) = (line, col);
            let simple = match c {
                '+' => Some(TokenKind::Plus),
                '-' => Some(TokenKind::Minus),
                '*' => Some(TokenKind::Star),
                '/' => Some(TokenKind::Slash),
                '^' => Some(TokenKind::Caret),
                '(' => Some(TokenKind::LParen),
                ')' => Some(TokenKind::RParen),
                '{' => Some(TokenKind::LBrace),
                '}' => Some(TokenKind::RBrace),
                ',' => Some(TokenKind::Comma),
                ';' => Some(TokenKind::Semicolon),
                '=' => Some(TokenKind::Equals),
                _ => None,
            };
            if let Some(kind) = simple {
                out.push(Token {
                    kind,
                    line: l0,
                    column: c0,
                });
                i += 1;
                col += 1;
                continue;
            }
            if c == '\n' {
                i += 1;
                line += 1;
                col = 1;
            } else if c.is_whitespace() {
                i += 1;
                col += 1;
            } else if c == '#' {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Token {
                    kind: TokenKind::Number(s.parse().unwrap()),
                    line: l0,
                    column: c0,
                });
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Token {
                    kind: TokenKind::Ident(s),
                    line: l0,
                    column: c0,
                });
            } else {
                return Err(Error::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
        out.push(Token {
            kind: TokenKind::Eof,
            line,
            column: col,
        });
        Ok(out)
    }
}

/// Syntax tree of an expression, before symbol resolution.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Num(BigRational),
    Name {
        name: String,
        line: usize,
        column: usize,
    },
    Call {
        name: String,
        args: Vec<Ast>,
        line: usize,
        column: usize,
    },
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Exp),
}

impl Ast {
    /// Resolves names against the context and builds the canonical expression.
    pub fn to_expr(&self, ctx: &Context) -> Result<Expr> {
        Ok(match self {
            Ast::Num(c) => Expr::rational(c.clone()),
            Ast::Name { name, line, column } => resolve_name(ctx, name, *line, *column)?,
            Ast::Call {
                name,
                args,
                line,
                column,
            } => {
                let vals = args
                    .iter()
                    .map(|a| a.to_expr(ctx))
                    .collect::<Result<Vec<_>>>()?;
                if name == "sqrt" && vals.len() == 1 {
                    return vals[0].sqrt();
                }
                let sym = ctx
                    .symbols
                    .function(name)
                    .ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
                if sym.arity != vals.len() {
                    return Err(Error::Syntax {
                        line: *line,
                        column: *column,
                        message: format!(
                            "`{name}` takes {} argument(s), got {}",
                            sym.arity,
                            vals.len()
                        ),
                    });
                }
                Expr::func(name, vals)
            }
            Ast::Neg(a) => a.to_expr(ctx)?.neg(),
            Ast::Add(a, b) => &a.to_expr(ctx)? + &b.to_expr(ctx)?,
            Ast::Sub(a, b) => &a.to_expr(ctx)? - &b.to_expr(ctx)?,
            Ast::Mul(a, b) => &a.to_expr(ctx)? * &b.to_expr(ctx)?,
            Ast::Div(a, b) => match b.as_ref() {
                // keep powered denominators factored
                Ast::Pow(base, e) => &a.to_expr(ctx)? * &base.to_expr(ctx)?.pow(-*e)?,
                _ => a.to_expr(ctx)?.div(&b.to_expr(ctx)?)?,
            },
            Ast::Pow(a, e) => a.to_expr(ctx)?.pow(*e)?,
        })
    }
}

/// Jet index encoded by a variable name: `u` is 0, `u12` is 12.
pub(crate) fn jet_name(name: &str) -> Option<usize> {
    let rest = name.strip_prefix('u')?;
    if rest.is_empty() {
        return Some(0);
    }
    if rest.chars().all(|c| c.is_ascii_digit()) && !(rest.len() > 1 && rest.starts_with('0')) {
        return rest.parse().ok();
    }
    None
}

fn resolve_name(ctx: &Context, name: &str, line: usize, column: usize) -> Result<Expr> {
    match name {
        "t" => return Ok(Expr::t()),
        "x" => return Ok(Expr::x()),
        _ => {}
    }
    if let Some(j) = jet_name(name) {
        ctx.check_jet(j)?;
        return Ok(Expr::var(Var::U(j)));
    }
    if ctx.symbols.is_unit(name) {
        return Ok(Expr::unit(name));
    }
    if ctx.symbols.function(name).is_some() {
        return Err(Error::Syntax {
            line,
            column,
            message: format!("function `{name}` used without arguments"),
        });
    }
    Err(Error::UnknownSymbol(name.to_string()))
}

/// Token-stream parser shared by expression and problem-file front ends.
pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(text: &str) -> Result<Parser> {
        Ok(Parser {
            tokens: Lexer::tokenize(text)?,
            pos: 0,
        })
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    pub fn peek_at(&self, k: usize) -> &Token {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    pub fn next_token(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    pub fn at_eof(&self) -> bool {
        self.at(&TokenKind::Eof)
    }

    pub fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.next_token();
            true
        } else {
            false
        }
    }

    pub fn error_here(&self, message: impl Into<String>) -> Error {
        let t = self.peek();
        Error::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    pub fn expect(&mut self, kind: &TokenKind) -> Result<Token> {
        if self.at(kind) {
            Ok(self.next_token())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                kind.describe(),
                self.peek().kind.describe()
            )))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String> {
        match &self.peek().kind {
            TokenKind::Ident(s) => {
                let s = s.clone();
                self.next_token();
                Ok(s)
            }
            k => Err(self.error_here(format!("expected a name, found {}", k.describe()))),
        }
    }

    pub fn expect_keyword(&mut self, word: &str) -> Result<()> {
        match &self.peek().kind {
            TokenKind::Ident(s) if s == word => {
                self.next_token();
                Ok(())
            }
            k => Err(self.error_here(format!("expected `{word}`, found {}", k.describe()))),
        }
    }

    pub fn parse_expr(&mut self) -> Result<Ast> {
        let mut lhs = self.parse_term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                lhs = Ast::Add(Box::new(lhs), Box::new(self.parse_term()?));
            } else if self.eat(&TokenKind::Minus) {
                lhs = Ast::Sub(Box::new(lhs), Box::new(self.parse_term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_term(&mut self) -> Result<Ast> {
        let mut lhs = self.parse_factor()?;
        loop {
            if self.eat(&TokenKind::Star) {
                lhs = Ast::Mul(Box::new(lhs), Box::new(self.parse_factor()?));
            } else if self.eat(&TokenKind::Slash) {
                lhs = Ast::Div(Box::new(lhs), Box::new(self.parse_factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Ast> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Ast::Neg(Box::new(self.parse_factor()?)));
        }
        if self.eat(&TokenKind::Plus) {
            return self.parse_factor();
        }
        let base = self.parse_base()?;
        if self.eat(&TokenKind::Caret) {
            let e = self.parse_exponent()?;
            return Ok(Ast::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn parse_int(&mut self) -> Result<i64> {
        let neg = self.eat(&TokenKind::Minus);
        match &self.peek().kind {
            TokenKind::Number(n) => {
                let v = n
                    .to_i64()
                    .ok_or_else(|| self.error_here("exponent too large"))?;
                self.next_token();
                Ok(if neg { -v } else { v })
            }
            k => Err(self.error_here(format!(
                "expected an integer exponent, found {}",
                k.describe()
            ))),
        }
    }

    fn parse_exponent(&mut self) -> Result<Exp> {
        if self.eat(&TokenKind::LParen) {
            let p = self.parse_int()?;
            let q = if self.eat(&TokenKind::Slash) {
                self.parse_int()?
            } else {
                1
            };
            if q == 0 {
                return Err(self.error_here("zero denominator in exponent"));
            }
            self.expect(&TokenKind::RParen)?;
            Ok(Exp::new(p, q))
        } else {
            Ok(Exp::from_integer(self.parse_int()?))
        }
    }

    fn parse_base(&mut self) -> Result<Ast> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Number(n) => {
                self.next_token();
                Ok(Ast::Num(BigRational::from_integer(n)))
            }
            TokenKind::LParen => {
                self.next_token();
                let e = self.parse_expr()?;
                self.expect(&TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                self.next_token();
                if self.eat(&TokenKind::LParen) {
                    let mut args = vec![self.parse_expr()?];
                    while self.eat(&TokenKind::Comma) {
                        args.push(self.parse_expr()?);
                    }
                    self.expect(&TokenKind::RParen)?;
                    Ok(Ast::Call {
                        name,
                        args,
                        line: tok.line,
                        column: tok.column,
                    })
                } else {
                    Ok(Ast::Name {
                        name,
                        line: tok.line,
                        column: tok.column,
                    })
                }
            }
            k => Err(self.error_here(format!("expected an expression, found {}", k.describe()))),
        }
    }
}

/// Parses a complete expression against a context.
pub fn parse_with(ctx: &Context, text: &str) -> Result<Expr> {
    let mut p = Parser::new(text)?;
    let ast = p.parse_expr()?;
    if !p.at_eof() {
        return Err(p.error_here(format!(
            "unexpected {} after expression",
            p.peek().kind.describe()
        )));
    }
    ast.to_expr(ctx)
}

/// Parses with the default context (built-in functions only).
pub fn parse_expr(text: &str) -> Result<Expr> {
    parse_with(&Context::new(), text)
}
