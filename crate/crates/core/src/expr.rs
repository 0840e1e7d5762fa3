//! Scalar field expressions over chart coordinates `x1..xn`.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr    := term (("+"|"-") term)* ;
//! term    := factor (("*"|"/") factor)* ;
//! factor  := "-" factor | power ;
//! power   := atom ("^" exponent)? ;
//! exponent:= "-"? NUMBER ("^" exponent)? | "(" exponent ")" ;
//! atom    := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")" ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-x1^2` is `-(x1^2)`, and exponents
//! must be numeric literals.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::{Jet3, MAX_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Expression tree. Variables are stored 0-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(c: f64) -> Self {
        Expr::Num(c)
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(c) if *c == 0.0)
    }

    /// Largest 0-based variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }

    /// Plain value at `p`.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        Ok(self.eval_jet(p, 0)?.value)
    }

    /// Value and partial derivatives up to `order` at `p`; slots above
    /// `order` are zero.
    pub fn eval_jet(&self, p: &[f64], order: u8) -> Result<Jet3> {
        assert!(
            order <= MAX_ORDER,
            "derivative order {order} requested, at most {MAX_ORDER} supported"
        );
        self.jet(p, order)
    }

    fn jet(&self, p: &[f64], order: u8) -> Result<Jet3> {
        let n = p.len();
        Ok(match self {
            Expr::Num(c) => Jet3::constant(n, order, *c),
            Expr::Var(i) => {
                let v = *p.get(*i).ok_or(Error::DimensionMismatch {
                    expected: i + 1,
                    got: n,
                })?;
                Jet3::variable(n, order, *i, v)
            }
            Expr::Neg(a) => -&a.jet(p, order)?,
            Expr::Add(a, b) => &a.jet(p, order)? + &b.jet(p, order)?,
            Expr::Sub(a, b) => &a.jet(p, order)? - &b.jet(p, order)?,
            Expr::Mul(a, b) => &a.jet(p, order)? * &b.jet(p, order)?,
            Expr::Div(a, b) => {
                let den = b.jet(p, order)?;
                let inv = den
                    .recip()
                    .ok_or_else(|| Error::Domain(format!("division by zero in `{b}`")))?;
                &a.jet(p, order)? * &inv
            }
            Expr::Pow(a, e) => {
                let base = a.jet(p, order)?;
                if e.fract() == 0.0 && e.abs() <= 1e9 {
                    base.powi(*e as i64).ok_or_else(|| {
                        Error::Domain(format!("zero base to negative power in `{self}`"))
                    })?
                } else {
                    base.powf(*e).ok_or_else(|| {
                        Error::Domain(format!(
                            "non-positive base {} to non-integer power in `{self}`",
                            base.value
                        ))
                    })?
                }
            }
            Expr::Call(f, a) => {
                let u = a.jet(p, order)?;
                match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Exp => u.exp(),
                    Func::Ln => u.ln().ok_or_else(|| {
                        Error::Domain(format!("ln of non-positive value {}", u.value))
                    })?,
                    Func::Sqrt => u.sqrt().ok_or_else(|| {
                        Error::Domain(format!("sqrt of value {} (not differentiable)", u.value))
                    })?,
                }
            }
        })
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => match **a {
                Expr::Num(_) | Expr::Var(_) | Expr::Call(..) | Expr::Pow(..) | Expr::Neg(_) => {
                    write!(f, "-{a}")
                }
                _ => write!(f, "-({a})"),
            },
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, e) => {
                match **a {
                    Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => write!(f, "{a}")?,
                    _ => write!(f, "({a})")?,
                }
                if *e < 0.0 {
                    write!(f, "^(-{})", -e)
                } else {
                    write!(f, "^{e}")
                }
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Parses `text` as an expression in chart dimension `n`.
pub fn parse(text: &str, n: usize) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        n,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos + 1,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs + self.term()?;
            } else if self.eat(b'-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs * self.factor()?;
            } else if self.eat(b'/') {
                lhs = lhs / self.factor()?;
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
            let e = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<f64> {
        if self.eat(b'(') {
            let e = self.exponent()?;
            self.expect(b')')?;
            return self.exponent_tail(e);
        }
        let neg = self.eat(b'-');
        self.skip_ws();
        if !matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit() || *c == b'.') {
            return Err(self.error("exponent must be a numeric literal"));
        }
        let v = self.number()?;
        self.exponent_tail(if neg { -v } else { v })
    }

    fn exponent_tail(&mut self, base: f64) -> Result<f64> {
        if self.eat(b'^') {
            let e = self.exponent()?;
            let v = base.powf(e);
            if !v.is_finite() {
                return Err(self.error("exponent literal overflows"));
            }
            Ok(v)
        } else {
            Ok(base)
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut k = i + 1;
            if k < s.len() && (s[k] == b'+' || s[k] == b'-') {
                k += 1;
            }
            if k < s.len() && s[k].is_ascii_digit() {
                while k < s.len() && s[k].is_ascii_digit() {
                    k += 1;
                }
                i = k;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii digits");
        let v: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
        if !v.is_finite() {
            return Err(self.error("number literal out of range"));
        }
        self.pos = i;
        Ok(v)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii ident");
                if let Some(f) = Func::from_name(name) {
                    if !self.eat(b'(') {
                        return Err(self.error(&format!("expected `(` after `{name}`")));
                    }
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if let Some(idx) = name.strip_prefix('x') {
                    if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) {
                        return match idx.parse::<usize>() {
                            Ok(k) if k >= 1 && k <= self.n => Ok(Expr::Var(k - 1)),
                            _ => Err(Error::UnknownVariable {
                                name: name.to_string(),
                                offset: start + 1,
                                dim: self.n,
                            }),
                        };
                    }
                }
                if self.peek() == Some(b'(') {
                    Err(Error::UnknownFunction {
                        name: name.to_string(),
                        offset: start + 1,
                    })
                } else {
                    Err(Error::UnknownVariable {
                        name: name.to_string(),
                        offset: start + 1,
                        dim: self.n,
                    })
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn parses_polynomial() {
        let e = parse("x1^2 + 3*x2", 2).unwrap();
        assert_eq!(
            e,
            Expr::Add(
                b(Expr::Pow(b(Expr::Var(0)), 2.0)),
                b(Expr::Mul(b(Expr::Num(3.0)), b(Expr::Var(1))))
            )
        );
    }

    #[test]
    fn parses_calls() {
        let e = parse("sin(x1)*exp(x2)", 2).unwrap();
        assert_eq!(
            e,
            Expr::Mul(
                b(Expr::Call(Func::Sin, b(Expr::Var(0)))),
                b(Expr::Call(Func::Exp, b(Expr::Var(1))))
            )
        );
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-x1^2", 1).unwrap();
        assert_eq!(e, Expr::Neg(b(Expr::Pow(b(Expr::Var(0)), 2.0))));
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
    }

    #[test]
    fn power_is_right_associative_on_literals() {
        let e = parse("x1^2^3", 1).unwrap();
        assert_eq!(e, Expr::Pow(b(Expr::Var(0)), 8.0));
        let e = parse("x1^(-2)", 1).unwrap();
        assert_eq!(e, Expr::Pow(b(Expr::Var(0)), -2.0));
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            parse("x3", 2),
            Err(Error::UnknownVariable { offset: 1, .. })
        ));
        assert!(matches!(parse("x0", 2), Err(Error::UnknownVariable { .. })));
        assert!(matches!(
            parse("1 + tan(x1)", 2),
            Err(Error::UnknownFunction { offset: 5, .. })
        ));
        assert!(matches!(
            parse("1 +", 2),
            Err(Error::Syntax { offset: 4, .. })
        ));
        assert!(matches!(parse("  ", 2), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1^x2", 2), Err(Error::Syntax { .. })));
        assert!(matches!(parse("(x1", 2), Err(Error::Syntax { .. })));
        assert!(matches!(parse("1e999", 2), Err(Error::Syntax { .. })));
    }

    #[test]
    fn jet_of_square() {
        let j = parse("x1^2", 1).unwrap().eval_jet(&[3.0], 2).unwrap();
        assert_eq!(j.value, 9.0);
        assert_eq!(j.d1, vec![6.0]);
        assert_eq!(j.d2, vec![2.0]);
        assert_eq!(j.d3, vec![0.0]);
    }

    #[test]
    fn jet_of_sine() {
        let j = parse("sin(x1)", 1).unwrap().eval_jet(&[0.0], 3).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.d1, vec![1.0]);
        assert_eq!(j.d2, vec![0.0]);
        assert_eq!(j.d3, vec![-1.0]);
    }

    #[test]
    fn order_zero_fills_higher_slots() {
        let j = parse("x1^3", 1).unwrap().eval_jet(&[2.0], 1).unwrap();
        assert_eq!(j.order(), 1);
        assert_eq!(j.d1, vec![12.0]);
        assert_eq!(j.d2, vec![0.0]);
    }

    #[test]
    fn domain_errors() {
        let p = [-1.0, 0.0];
        assert!(matches!(
            parse("ln(x1)", 2).unwrap().eval_jet(&p, 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            parse("sqrt(x1)", 2).unwrap().eval_jet(&p, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            parse("1/x2", 2).unwrap().eval_jet(&p, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            parse("x1^0.5", 2).unwrap().eval_jet(&p, 0),
            Err(Error::Domain(_))
        ));
        // integer powers of negative bases are fine
        assert_eq!(parse("x1^3", 2).unwrap().eval(&p).unwrap(), -1.0);
    }

    #[test]
    fn printer_output_reparses() {
        for t in [
            "x1^2 + 3*x2",
            "-(x1 - x2)/(1 + x1^2)^2",
            "--x1",
            "-2^2",
            "sqrt(1 + x1*x1)^(-1.5) - ln(2)",
            "4/(1+x1^2+x2^2)^2",
        ] {
            let e = parse(t, 2).unwrap();
            let printed = e.to_string();
            assert_eq!(parse(&printed, 2).unwrap(), e, "{t} -> {printed}");
        }
    }
}
