//! A small expression language for potentials and profiles.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | atom ('^' factor)?
//! atom   := number | 'x' | 'pi' | 'e' | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and unary minus binds looser than `^`, so
//! `-x^2` parses as `-(x^2)`. Expressions evaluate in `f64` and carry exact
//! symbolic derivatives, which keeps potentials like `W = r''/(2r) - (r'/(2r))^2`
//! accurate near the boundary.
//!
//! ```
//! use zetasum::expr::Expr;
//!
//! let e = Expr::parse("2 + 3*x^2").unwrap();
//! assert_eq!(e.eval(2.0), 14.0);
//! assert_eq!(e.derive().eval(3.0), 18.0);
//! ```

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

/// Expression tree over the single variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Pi,
    E,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Fun(Func, Box<Expr>),
}

impl Expr {
    /// Parse an expression from text.
    pub fn parse(text: &str) -> Result<Expr> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        p.skip_ws();
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e.simplify())
    }

    /// Evaluate at `x`; domain violations surface as NaN.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Pi => std::f64::consts::PI,
            Expr::E => std::f64::consts::E,
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Fun(f, a) => f.apply(a.eval(x)),
        }
    }

    /// Evaluate with domain checking.
    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("expression not finite at x = {x}")))
        }
    }

    /// Exact symbolic derivative.
    pub fn derive(&self) -> Expr {
        use Expr::*;
        let d = match self {
            Num(_) | Pi | E => Num(0.0),
            Var => Num(1.0),
            Neg(a) => Neg(Box::new(a.derive())),
            Add(a, b) => Add(Box::new(a.derive()), Box::new(b.derive())),
            Sub(a, b) => Sub(Box::new(a.derive()), Box::new(b.derive())),
            Mul(a, b) => Add(
                Box::new(Mul(Box::new(a.derive()), b.clone())),
                Box::new(Mul(a.clone(), Box::new(b.derive()))),
            ),
            Div(a, b) => Div(
                Box::new(Sub(
                    Box::new(Mul(Box::new(a.derive()), b.clone())),
                    Box::new(Mul(a.clone(), Box::new(b.derive()))),
                )),
                Box::new(Pow(b.clone(), Box::new(Num(2.0)))),
            ),
            Pow(a, b) => match b.constant_value() {
                // d(u^c) = c u^(c-1) u'; the general formula would go through
                // log u and break at u = 0.
                Some(c) => Mul(
                    Box::new(Mul(
                        Box::new(Num(c)),
                        Box::new(Pow(a.clone(), Box::new(Num(c - 1.0)))),
                    )),
                    Box::new(a.derive()),
                ),
                None => {
                    // d(u^v) = u^v (v' log u + v u'/u)
                    let uv = Pow(a.clone(), b.clone());
                    let t1 = Mul(Box::new(b.derive()), Box::new(Fun(Func::Log, a.clone())));
                    let t2 = Mul(b.clone(), Box::new(Div(Box::new(a.derive()), a.clone())));
                    Mul(Box::new(uv), Box::new(Add(Box::new(t1), Box::new(t2))))
                }
            },
            Fun(f, a) => {
                let inner = a.derive();
                let outer = match f {
                    Func::Sin => Fun(Func::Cos, a.clone()),
                    Func::Cos => Neg(Box::new(Fun(Func::Sin, a.clone()))),
                    Func::Exp => Fun(Func::Exp, a.clone()),
                    Func::Log => Div(Box::new(Num(1.0)), a.clone()),
                    Func::Sinh => Fun(Func::Cosh, a.clone()),
                    Func::Cosh => Fun(Func::Sinh, a.clone()),
                    Func::Tanh => Sub(
                        Box::new(Num(1.0)),
                        Box::new(Pow(Box::new(Fun(Func::Tanh, a.clone())), Box::new(Num(2.0)))),
                    ),
                    Func::Sqrt => Div(
                        Box::new(Num(0.5)),
                        Box::new(Fun(Func::Sqrt, a.clone())),
                    ),
                };
                Mul(Box::new(outer), Box::new(inner))
            }
        };
        d.simplify()
    }

    fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Pi => Some(std::f64::consts::PI),
            Expr::E => Some(std::f64::consts::E),
            Expr::Neg(a) => a.constant_value().map(|v| -v),
            Expr::Add(a, b) => Some(a.constant_value()? + b.constant_value()?),
            Expr::Sub(a, b) => Some(a.constant_value()? - b.constant_value()?),
            Expr::Mul(a, b) => Some(a.constant_value()? * b.constant_value()?),
            Expr::Div(a, b) => Some(a.constant_value()? / b.constant_value()?),
            Expr::Pow(a, b) => Some(a.constant_value()?.powf(b.constant_value()?)),
            _ => None,
        }
    }

    /// Light structural simplification: constant folding, neutral elements.
    pub fn simplify(&self) -> Expr {
        use Expr::*;
        let is = |e: &Expr, v: f64| matches!(e, Num(x) if *x == v);
        match self {
            Neg(a) => {
                let a = a.simplify();
                match a {
                    Num(v) => Num(-v),
                    Neg(inner) => *inner,
                    _ => Neg(Box::new(a)),
                }
            }
            Add(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(x), Num(y)) => Num(x + y),
                    _ if is(&a, 0.0) => b,
                    _ if is(&b, 0.0) => a,
                    _ => Add(Box::new(a), Box::new(b)),
                }
            }
            Sub(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(x), Num(y)) => Num(x - y),
                    _ if is(&b, 0.0) => a,
                    _ if is(&a, 0.0) => Neg(Box::new(b)).simplify(),
                    _ => Sub(Box::new(a), Box::new(b)),
                }
            }
            Mul(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(x), Num(y)) => Num(x * y),
                    _ if is(&a, 0.0) || is(&b, 0.0) => Num(0.0),
                    _ if is(&a, 1.0) => b,
                    _ if is(&b, 1.0) => a,
                    _ => Mul(Box::new(a), Box::new(b)),
                }
            }
            Div(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(x), Num(y)) if *y != 0.0 => Num(x / y),
                    _ if is(&a, 0.0) && !is(&b, 0.0) => Num(0.0),
                    _ if is(&b, 1.0) => a,
                    _ => Div(Box::new(a), Box::new(b)),
                }
            }
            Pow(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(x), Num(y)) => Num(x.powf(*y)),
                    _ if is(&b, 1.0) => a,
                    _ if is(&b, 0.0) => Num(1.0),
                    _ => Pow(Box::new(a), Box::new(b)),
                }
            }
            Fun(f, a) => {
                let a = a.simplify();
                match a {
                    Num(v) => Num(f.apply(v)),
                    _ => Fun(*f, Box::new(a)),
                }
            }
            other => other.clone(),
        }
    }

    /// Shared evaluator closure, convenient for the numerical layers.
    pub fn evaluator(&self) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        let e = self.clone();
        Arc::new(move |x| e.eval(x))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var => write!(f, "x"),
            Expr::Pi => write!(f, "pi"),
            Expr::E => write!(f, "e"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Fun(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Parse { offset: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            _ => Err(self.error("expected a number, name, or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit() || c == b'.').unwrap_or(false) {
            self.pos += 1;
        }
        // Scientific notation: [eE][+-]?digits, only when digits follow.
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mut probe = self.pos + 1;
            if matches!(self.src.get(probe), Some(b'+') | Some(b'-')) {
                probe += 1;
            }
            if self.src.get(probe).map(|c| c.is_ascii_digit()).unwrap_or(false) {
                self.pos = probe + 1;
                while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("invalid number literal '{text}'"),
        })?;
        self.skip_ws();
        Ok(Expr::Num(value))
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_alphanumeric()).unwrap_or(false) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        self.skip_ws();
        match name {
            "x" => Ok(Expr::Var),
            "pi" => Ok(Expr::Pi),
            "e" => Ok(Expr::E),
            _ => {
                let func = match name {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "log" | "ln" => Func::Log,
                    "sinh" => Func::Sinh,
                    "cosh" => Func::Cosh,
                    "tanh" => Func::Tanh,
                    "sqrt" => Func::Sqrt,
                    _ => {
                        return Err(Error::Parse {
                            offset: start,
                            message: format!("unknown identifier '{name}'"),
                        })
                    }
                };
                if !self.eat(b'(') {
                    return Err(self.error("expected '(' after function name"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(Expr::Fun(func, Box::new(arg)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn precedence() {
        let e = Expr::parse("2+3*x^2").unwrap();
        assert_relative_eq!(e.eval(2.0), 14.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_pow() {
        let e = Expr::parse("-x^2").unwrap();
        assert_relative_eq!(e.eval(3.0), -9.0);
        let e = Expr::parse("2^-2").unwrap();
        assert_relative_eq!(e.eval(0.0), 0.25);
    }

    #[test]
    fn right_associative_pow() {
        let e = Expr::parse("2^3^2").unwrap();
        assert_relative_eq!(e.eval(0.0), 512.0);
    }

    #[test]
    fn parses_exp_of_product() {
        let e = Expr::parse("exp(-2*x)").unwrap();
        assert_relative_eq!(e.eval(0.5), (-1.0_f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(e.eval(0.0), 1.0);
    }

    #[test]
    fn standard_values() {
        assert_relative_eq!(Expr::parse("exp(0)").unwrap().eval(0.0), 1.0);
        assert_relative_eq!(
            Expr::parse("sinh(1)").unwrap().eval(0.0),
            1.1752011936438014,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            Expr::parse("pi").unwrap().eval(0.0),
            std::f64::consts::PI
        );
    }

    #[test]
    fn syntax_error_offset() {
        match Expr::parse("sin(x") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(Expr::parse("foo(x)").is_err());
    }

    #[test]
    fn derivative_of_square() {
        let e = Expr::parse("x^2").unwrap();
        assert_relative_eq!(e.derive().eval(3.0), 6.0);
    }

    #[test]
    fn derivative_chain_rule() {
        let e = Expr::parse("exp(-2*x)").unwrap();
        let d = e.derive();
        assert_relative_eq!(d.eval(0.3), -2.0 * (-0.6_f64).exp(), max_relative = 1e-13);
        // Second derivative too; the surface frontend needs r''.
        let d2 = d.derive();
        assert_relative_eq!(d2.eval(0.3), 4.0 * (-0.6_f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn derivative_of_sqrt_stays_finite_off_zero() {
        let e = Expr::parse("sqrt(x)").unwrap();
        let d = e.derive();
        assert_relative_eq!(d.eval(4.0), 0.25, max_relative = 1e-13);
    }

    #[test]
    fn scientific_notation_vs_euler_constant() {
        assert_relative_eq!(Expr::parse("2e3").unwrap().eval(0.0), 2000.0);
        assert_relative_eq!(
            Expr::parse("2*e").unwrap().eval(0.0),
            2.0 * std::f64::consts::E
        );
    }
}
