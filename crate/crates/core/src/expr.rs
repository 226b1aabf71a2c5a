//! Component expressions: a small closed-form language for field components.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | name | func "(" expr ")" | "(" expr ")"
//! func    := "sin" | "cos" | "exp" | "ln"
//! ```
//!
//! Expressions evaluate over any [`Scalar`] and differentiate symbolically,
//! which backs the exact-closed-form derivative strategy.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
}

/// Expression syntax error with a 1-based column into the source text.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("column {column}: {message}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn sin(self) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(v.sin()),
            e => Expr::Sin(Box::new(e)),
        }
    }

    pub fn cos(self) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(v.cos()),
            e => Expr::Cos(Box::new(e)),
        }
    }

    pub fn exp(self) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(v.exp()),
            e => Expr::Exp(Box::new(e)),
        }
    }

    pub fn ln(self) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(v.ln()),
            e => Expr::Ln(Box::new(e)),
        }
    }

    pub fn pow(self, e: Expr) -> Expr {
        match (self, e) {
            (_, Expr::Const(z)) if z == 0.0 => Expr::Const(1.0),
            (b, Expr::Const(o)) if o == 1.0 => b,
            (Expr::Const(b), Expr::Const(z)) => Expr::Const(b.powf(z)),
            (b, e) => Expr::Pow(Box::new(b), Box::new(e)),
        }
    }

    pub fn powi(self, n: i32) -> Expr {
        self.pow(Expr::Const(n as f64))
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Ln(a) => a.max_var(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => match (a.max_var(), b.max_var()) {
                (Some(p), Some(q)) => Some(p.max(q)),
                (p, q) => p.or(q),
            },
        }
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match self {
            Expr::Const(v) => T::cst(*v),
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => match integer_exponent(b) {
                Some(n) => a.eval(x).powi(n),
                None => a.eval(x).powf(b.eval(x)),
            },
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Ln(a) => a.eval(x).ln(),
        }
    }

    /// Symbolic partial derivative with respect to variable `v`.
    pub fn diff(&self, v: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(i) => Expr::Const(if *i == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => -a.diff(v),
            Expr::Add(a, b) => a.diff(v) + b.diff(v),
            Expr::Sub(a, b) => a.diff(v) - b.diff(v),
            Expr::Mul(a, b) => a.diff(v) * (**b).clone() + (**a).clone() * b.diff(v),
            Expr::Div(a, b) => {
                let num = a.diff(v) * (**b).clone() - (**a).clone() * b.diff(v);
                num / (**b).clone().powi(2)
            }
            Expr::Pow(a, b) => {
                if let Some(c) = b.as_const() {
                    Expr::Const(c) * (**a).clone().pow(Expr::Const(c - 1.0)) * a.diff(v)
                } else {
                    // a^b (b' ln a + b a'/a)
                    let ln_a = (**a).clone().ln();
                    let inner = b.diff(v) * ln_a + (**b).clone() * a.diff(v) / (**a).clone();
                    self.clone() * inner
                }
            }
            Expr::Sin(a) => (**a).clone().cos() * a.diff(v),
            Expr::Cos(a) => -((**a).clone().sin()) * a.diff(v),
            Expr::Exp(a) => self.clone() * a.diff(v),
            Expr::Ln(a) => a.diff(v) / (**a).clone(),
        }
    }

    /// Parse with the given coordinate names bound to `Var(0..)`.
    pub fn parse(src: &str, names: &[String]) -> Result<Expr, ExprError> {
        let mut p = Parser { src, pos: 0, names };
        p.skip_ws();
        if p.at_end() {
            return Err(p.error("empty expression"));
        }
        let e = p.expr()?;
        p.skip_ws();
        if !p.at_end() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Render with explicit coordinate names, parseable by [`Expr::parse`].
    pub fn display<'a>(&'a self, names: &'a [String]) -> Named<'a> {
        Named { expr: self, names }
    }
}

fn integer_exponent(e: &Expr) -> Option<i32> {
    match e.as_const() {
        Some(c) if c.fract() == 0.0 && c.abs() < i32::MAX as f64 => Some(c as i32),
        _ => None,
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
            (a, b) if a.is_zero() => b,
            (a, b) if b.is_zero() => a,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => -b,
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
            (a, b) if a.is_zero() || b.is_zero() => Expr::zero(),
            (a, b) if a.is_one() => b,
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) if b != 0.0 => Expr::Const(a / b),
            (a, b) if a.is_zero() && !b.is_zero() => Expr::zero(),
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(a) => Expr::Const(-a),
            Expr::Neg(a) => *a,
            e => Expr::Neg(Box::new(e)),
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Expr {
        Expr::Const(v)
    }
}

pub struct Named<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.names;
        let sub = |e: &'_ Expr| -> String { Named { expr: e, names }.to_string() };
        match self.expr {
            Expr::Const(v) if *v < 0.0 => write!(f, "(0-{})", -v),
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(i) => match self.names.get(*i) {
                Some(n) => write!(f, "{n}"),
                None => write!(f, "x{i}"),
            },
            Expr::Neg(a) => write!(f, "(-{})", sub(a)),
            Expr::Add(a, b) => write!(f, "({} + {})", sub(a), sub(b)),
            Expr::Sub(a, b) => write!(f, "({} - {})", sub(a), sub(b)),
            Expr::Mul(a, b) => write!(f, "({} * {})", sub(a), sub(b)),
            Expr::Div(a, b) => write!(f, "({} / {})", sub(a), sub(b)),
            Expr::Pow(a, b) => write!(f, "({} ^ {})", sub(a), sub(b)),
            Expr::Sin(a) => write!(f, "sin({})", sub(a)),
            Expr::Cos(a) => write!(f, "cos({})", sub(a)),
            Expr::Exp(a) => write!(f, "exp({})", sub(a)),
            Expr::Ln(a) => write!(f, "ln({})", sub(a)),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError { column: self.src[..self.pos].chars().count() + 1, message: message.to_string() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        self.pos += 1;
                    } else if (c == 'e' || c == 'E') && self.exponent_follows() {
                        self.pos += 1;
                        if matches!(self.peek(), Some('+') | Some('-')) {
                            self.pos += 1;
                        }
                    } else {
                        break;
                    }
                }
                let text = &self.src[start..self.pos];
                text.parse::<f64>().map(Expr::Const).map_err(|_| {
                    self.pos = start;
                    self.error(&format!("invalid number '{text}'"))
                })
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                while let Some(c) = self.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        self.pos += c.len_utf8();
                    } else {
                        break;
                    }
                }
                let name = &self.src[start..self.pos];
                if let Some(i) = self.names.iter().position(|n| n == name) {
                    return Ok(Expr::Var(i));
                }
                let func: fn(Box<Expr>) -> Expr = match name {
                    "sin" => Expr::Sin,
                    "cos" => Expr::Cos,
                    "exp" => Expr::Exp,
                    "ln" => Expr::Ln,
                    _ => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown name '{name}'")));
                    }
                };
                if !self.eat('(') {
                    return Err(self.error(&format!("expected '(' after {name}")));
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(func(Box::new(arg)))
            }
            Some(c) => Err(self.error(&format!("unexpected character '{c}'"))),
        }
    }

    fn exponent_follows(&self) -> bool {
        let rest = &self.src[self.pos + 1..];
        let rest = rest.strip_prefix(['+', '-']).unwrap_or(rest);
        rest.starts_with(|c: char| c.is_ascii_digit())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;

    fn xy() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2*x^2 - y/4", &xy()).unwrap();
        assert_eq!(e.eval(&[3.0, 8.0]), 1.0 + 18.0 - 2.0);
        let e = Expr::parse("-x^2", &xy()).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0]), -9.0);
        let e = Expr::parse("2^-1 * 1.5e1", &xy()).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), 7.5);
    }

    #[test]
    fn functions_parse_and_evaluate() {
        let e = Expr::parse("sin(x)*cos(y) + exp(0) + ln(exp(2))", &xy()).unwrap();
        let v: f64 = e.eval(&[0.3, 0.4]);
        assert!((v - (0.3f64.sin() * 0.4f64.cos() + 3.0)).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_columns() {
        let err = Expr::parse("x + z", &xy()).unwrap_err();
        assert_eq!(err.column, 5);
        let err = Expr::parse("(x + y", &xy()).unwrap_err();
        assert_eq!(err.column, 7);
        assert!(Expr::parse("", &xy()).is_err());
        assert!(Expr::parse("x y", &xy()).is_err());
    }

    #[test]
    fn symbolic_derivative_matches_dual() {
        let e = Expr::parse("x^3*sin(y) + exp(x*y)/(1 + y^2) + x^y", &xy()).unwrap();
        let p = [1.3, 0.7];
        for v in 0..2 {
            let sym: f64 = e.diff(v).eval(&p);
            let dual: Dual<f64> = e.eval(&crate::scalar::seed(&p, v));
            assert!((sym - dual.eps).abs() < 1e-12, "v={v}: {sym} vs {}", dual.eps);
        }
    }

    #[test]
    fn display_round_trips() {
        let names = xy();
        for src in ["x^2 - 3*y", "-(x + 1)/(y - 2.5)", "sin(x)*exp(-y)", "-2.25*x"] {
            let e = Expr::parse(src, &names).unwrap();
            let printed = e.display(&names).to_string();
            let back = Expr::parse(&printed, &names).unwrap();
            let p = [0.4, -0.9];
            assert_eq!(e.eval(&p), back.eval(&p), "{src} -> {printed}");
        }
    }

    #[test]
    fn constant_folding() {
        assert!((Expr::var(0) * Expr::zero()).is_zero());
        assert!(Expr::c(2.0).sin().as_const().is_some());
        assert_eq!(Expr::var(1).diff(0), Expr::zero());
    }
}
