//! Coefficient expressions for user-supplied forms and fields.
//!
//! Config files describe custom distributions through six comma-separated
//! coefficient expressions per form. The grammar is polynomials in the six
//! coordinates extended by `sin`, `cos` and `exp`:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | postfix
//! postfix := atom ('^' uint)*
//! atom    := number | x1 | x2 | y1 | y2 | z1 | z2
//!          | sin '(' expr ')' | cos '(' expr ')' | exp '(' expr ')'
//!          | '(' expr ')'
//! ```
//!
//! Expressions evaluate together with their gradient through forward-mode
//! duals, so compiled forms and fields carry analytic derivative maps
//! instead of falling back to finite differences.

use std::sync::Arc;

use nalgebra::{Matrix6, Vector6};

use crate::error::{Error, Result};
use crate::geometry::{OneForm, Point6, VectorField};

/// Coordinate names in slot order.
pub const VAR_NAMES: [&str; 6] = ["x1", "x2", "y1", "y2", "z1", "z2"];

/// Parsed coefficient expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Coordinate slot, `0..6` in [`VAR_NAMES`] order.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

/// Value and gradient of an expression at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; 6],
}

impl Dual {
    fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; 6] }
    }

    fn var(slot: usize, v: f64) -> Self {
        let mut d = [0.0; 6];
        d[slot] = 1.0;
        Dual { v, d }
    }

    fn map(self, v: f64, dv: f64) -> Self {
        Dual {
            v,
            d: self.d.map(|t| dv * t),
        }
    }
}

impl std::ops::Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(rhs.d) {
            *a += b;
        }
        Dual { v: self.v + rhs.v, d }
    }
}

impl std::ops::Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(rhs.d) {
            *a -= b;
        }
        Dual { v: self.v - rhs.v, d }
    }
}

impl std::ops::Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        let mut d = [0.0; 6];
        for i in 0..6 {
            d[i] = self.d[i] * rhs.v + self.v * rhs.d[i];
        }
        Dual { v: self.v * rhs.v, d }
    }
}

impl std::ops::Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: self.d.map(|t| -t),
        }
    }
}

impl Expr {
    pub fn eval(&self, x: &Point6) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(slot) => x[*slot],
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Neg(a) => -a.eval(x),
            Expr::Pow(a, n) => a.eval(x).powi(*n as i32),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }

    pub fn eval_dual(&self, x: &Point6) -> Dual {
        match self {
            Expr::Const(c) => Dual::constant(*c),
            Expr::Var(slot) => Dual::var(*slot, x[*slot]),
            Expr::Add(a, b) => a.eval_dual(x) + b.eval_dual(x),
            Expr::Sub(a, b) => a.eval_dual(x) - b.eval_dual(x),
            Expr::Mul(a, b) => a.eval_dual(x) * b.eval_dual(x),
            Expr::Neg(a) => -a.eval_dual(x),
            Expr::Pow(a, n) => {
                let u = a.eval_dual(x);
                let n = *n as i32;
                u.map(u.v.powi(n), f64::from(n) * u.v.powi(n - 1))
            }
            Expr::Sin(a) => {
                let u = a.eval_dual(x);
                u.map(u.v.sin(), u.v.cos())
            }
            Expr::Cos(a) => {
                let u = a.eval_dual(x);
                u.map(u.v.cos(), -u.v.sin())
            }
            Expr::Exp(a) => {
                let u = a.eval_dual(x);
                let e = u.v.exp();
                u.map(e, e)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Var(usize),
    Func(Func),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
}

struct Token {
    tok: Tok,
    /// 1-based character column in the source string.
    col: usize,
}

fn parse_error(ctx: &str, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        at: format!("{ctx}:{col}"),
        msg: msg.into(),
    }
}

fn tokenize(src: &str, ctx: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let col = i + 1;
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, col });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // Exponent suffix, only when digits follow.
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text
                .parse()
                .map_err(|_| parse_error(ctx, col, format!("bad number literal '{text}'")))?;
            out.push(Token {
                tok: Tok::Num(value),
                col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            let tok = if let Some(slot) = VAR_NAMES.iter().position(|v| *v == name) {
                Tok::Var(slot)
            } else {
                match name.as_str() {
                    "sin" => Tok::Func(Func::Sin),
                    "cos" => Tok::Func(Func::Cos),
                    "exp" => Tok::Func(Func::Exp),
                    _ => {
                        return Err(parse_error(
                            ctx,
                            col,
                            format!("unknown name '{name}', expected a coordinate (x1..z2) or sin/cos/exp"),
                        ))
                    }
                }
            };
            out.push(Token { tok, col });
            continue;
        }
        return Err(parse_error(ctx, col, format!("unexpected character '{c}'")));
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    ctx: &'a str,
    end_col: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &str, ctx: &'a str) -> Result<Self> {
        Ok(Parser {
            tokens: tokenize(src, ctx)?,
            pos: 0,
            ctx,
            end_col: src.chars().count() + 1,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.end_col, |t| t.col)
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.tokens.get(self.pos).map(|t| t.tok);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(parse_error(self.ctx, self.col(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.postfix()
        }
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut base = self.atom()?;
        while self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let col = self.col();
            match self.bump() {
                Some(Tok::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) => {
                    base = Expr::Pow(Box::new(base), v as u32);
                }
                _ => {
                    return Err(parse_error(
                        self.ctx,
                        col,
                        "exponent must be a nonnegative integer literal",
                    ))
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.col();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::Var(slot)) => Ok(Expr::Var(slot)),
            Some(Tok::Func(f)) => {
                self.expect(Tok::LParen, "'(' after function name")?;
                let arg = Box::new(self.expr()?);
                self.expect(Tok::RParen, "closing ')'")?;
                Ok(match f {
                    Func::Sin => Expr::Sin(arg),
                    Func::Cos => Expr::Cos(arg),
                    Func::Exp => Expr::Exp(arg),
                })
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "closing ')'")?;
                Ok(inner)
            }
            Some(_) | None => Err(parse_error(
                self.ctx,
                col,
                "expected a number, coordinate, function call or '('",
            )),
        }
    }
}

/// Parse a single expression; `ctx` names the source (config key, flag) in
/// error positions.
pub fn parse_expr(src: &str, ctx: &str) -> Result<Expr> {
    let mut parser = Parser::new(src, ctx)?;
    let expr = parser.expr()?;
    if parser.pos < parser.tokens.len() {
        return Err(parse_error(
            ctx,
            parser.col(),
            "trailing input after expression",
        ));
    }
    Ok(expr)
}

/// Parse six comma-separated coefficient expressions.
pub fn parse_coeff_list(src: &str, ctx: &str) -> Result<[Expr; 6]> {
    let mut parser = Parser::new(src, ctx)?;
    let mut coeffs = Vec::with_capacity(6);
    loop {
        coeffs.push(parser.expr()?);
        match parser.peek() {
            Some(Tok::Comma) => parser.pos += 1,
            None => break,
            _ => {
                return Err(parse_error(
                    ctx,
                    parser.col(),
                    "expected ',' between coefficients",
                ))
            }
        }
    }
    let n = coeffs.len();
    coeffs.try_into().map_err(|_| {
        parse_error(
            ctx,
            parser.end_col,
            format!("expected 6 coefficients ({}), got {n}", VAR_NAMES.join(", ")),
        )
    })
}

fn coeff_vector(exprs: &[Expr; 6], x: &Point6) -> Vector6<f64> {
    Vector6::from_fn(|j, _| exprs[j].eval(x))
}

/// Build a one-form `sum_j A_j dx^j` from coefficient expressions, with the
/// exterior derivative `C = jac - jac^T` computed through duals.
pub fn one_form_from_exprs(label: impl Into<String>, exprs: [Expr; 6]) -> OneForm {
    let exprs = Arc::new(exprs);
    let coeff = Arc::clone(&exprs);
    let dcoeff = Arc::clone(&exprs);
    OneForm::new(
        label,
        Arc::new(move |x: &Point6| coeff_vector(&coeff, x)),
    )
    .with_dcoeff(Arc::new(move |x: &Point6| {
        let mut jac = Matrix6::zeros();
        for (j, expr) in dcoeff.iter().enumerate() {
            let grad = expr.eval_dual(x).d;
            for i in 0..6 {
                jac[(i, j)] = grad[i];
            }
        }
        jac - jac.transpose()
    }))
}

/// Build a vector field from component expressions, with the Jacobian
/// `J_ij = d_j V_i` computed through duals.
pub fn vector_field_from_exprs(label: impl Into<String>, exprs: [Expr; 6]) -> VectorField {
    let exprs = Arc::new(exprs);
    let value = Arc::clone(&exprs);
    let jac_exprs = Arc::clone(&exprs);
    VectorField::new(
        label,
        Arc::new(move |x: &Point6| coeff_vector(&value, x)),
    )
    .with_jacobian(Arc::new(move |x: &Point6| {
        let mut jac = Matrix6::zeros();
        for (i, expr) in jac_exprs.iter().enumerate() {
            let grad = expr.eval_dual(x).d;
            for j in 0..6 {
                jac[(i, j)] = grad[j];
            }
        }
        jac
    }))
}
