//! Closed arithmetic expressions in the single variable `x`.
//!
//! Grammar (usual precedence, `^` binds tighter than unary minus and is
//! right associative):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          exponent must be constant
//! atom    := number | 'x' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//!          | '|' expr '|' | 'piecewise' '(' expr (',' number ',' expr)* ')'
//! func    := ln | log | exp | sqrt | abs | sin | cos
//! ```
//!
//! `piecewise(e0, b1, e1, b2, e2)` evaluates `e0` for `x < b1`, `e1` for
//! `b1 <= x < b2` and `e2` otherwise. Breakpoints are constants and must be
//! strictly increasing.
//!
//! An [`Expr`] keeps its source text, so documents survive a serialization
//! round trip unchanged.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Ln,
    Exp,
    Sqrt,
    Abs,
    Sin,
    Cos,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "ln" | "log" => Func::Ln,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Ln => v.ln(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
    Call(Func, Box<Node>),
    Piecewise { breaks: Vec<f64>, branches: Vec<Node> },
}

impl Node {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var => x,
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, p) => {
                let base = a.eval(x);
                if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                    base.powi(*p as i32)
                } else {
                    base.powf(*p)
                }
            }
            Node::Call(f, a) => f.apply(a.eval(x)),
            Node::Piecewise { breaks, branches } => {
                let idx = breaks.partition_point(|&b| b <= x);
                branches[idx].eval(x)
            }
        }
    }

    fn has_var(&self) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var => true,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.has_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.has_var() || b.has_var()
            }
            Node::Piecewise { .. } => true,
        }
    }
}

/// A parsed expression together with the text it came from.
#[derive(Clone, Debug)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr> {
        let tokens = tokenize(source).map_err(|m| expr_error(source, m))?;
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser.expr().map_err(|m| expr_error(source, m))?;
        if parser.pos != parser.tokens.len() {
            return Err(expr_error(
                source,
                format!("unexpected trailing input at token {}", parser.pos + 1),
            ));
        }
        Ok(Expr {
            source: source.to_string(),
            root,
        })
    }

    /// The constant function `value`.
    pub fn constant(value: f64) -> Expr {
        Expr {
            source: format!("{value}"),
            root: Node::Const(value),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Raw evaluation; may return NaN or an infinity.
    pub fn eval(&self, x: f64) -> f64 {
        self.root.eval(x)
    }

    /// Evaluation that rejects non-finite results.
    pub fn eval_finite(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!(
                "`{}` is not finite at x = {x} (got {v})",
                self.source
            )))
        }
    }

    pub fn is_constant(&self) -> bool {
        !self.root.has_var()
    }

    /// The expression `x ↦ ±e(−x)`, written out as new source text. `None`
    /// for expressions using `piecewise`, whose breakpoints would need
    /// reordering.
    pub fn reflected(&self, negate: bool) -> Option<Expr> {
        let tokens = tokenize(&self.source).expect("source was tokenized before");
        if tokens.contains(&Tok::Ident("piecewise".into())) {
            return None;
        }
        let mut body = String::new();
        for t in tokens {
            match t {
                Tok::Num(v) => body.push_str(&format!("{v:?}")),
                Tok::Ident(name) if name == "x" => body.push_str("(-x)"),
                Tok::Ident(name) => body.push_str(&name),
                Tok::Op(c) => body.push(c),
            }
            body.push(' ');
        }
        let text = if negate {
            format!("-({})", body.trim_end())
        } else {
            body.trim_end().to_string()
        };
        Some(Expr::parse(&text).expect("reflection of a valid expression parses"))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

fn expr_error(source: &str, message: String) -> Error {
    Error::Expr {
        source_text: source.to_string(),
        message,
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> std::result::Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part: 1e-3, 2.5E+4
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| format!("invalid number `{text}`"))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),|".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

type PResult<T> = std::result::Result<T, String>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(format!("expected `{op}`"))
        }
    }

    fn expr(&mut self) -> PResult<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> PResult<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> PResult<Node> {
        if self.eat_op('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat_op('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> PResult<Node> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let exponent = self.unary()?;
            if exponent.has_var() {
                return Err("exponent must be a constant".into());
            }
            let p = exponent.eval(0.0);
            if !p.is_finite() {
                return Err("exponent is not a finite constant".into());
            }
            Ok(Node::Pow(Box::new(base), p))
        } else {
            Ok(base)
        }
    }

    fn constant_arg(&mut self) -> PResult<f64> {
        let node = self.expr()?;
        if node.has_var() {
            return Err("piecewise breakpoints must be constants".into());
        }
        let v = node.eval(0.0);
        if v.is_finite() {
            Ok(v)
        } else {
            Err("piecewise breakpoint is not finite".into())
        }
    }

    fn atom(&mut self) -> PResult<Node> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            Some(Tok::Op('|')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_op('|')?;
                Ok(Node::Call(Func::Abs, Box::new(inner)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Node::Var),
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "e" => Ok(Node::Const(std::f64::consts::E)),
                    "piecewise" => self.piecewise(),
                    other => {
                        let func = Func::from_name(other)
                            .ok_or_else(|| format!("unknown identifier `{other}`"))?;
                        self.expect_op('(')?;
                        let arg = self.expr()?;
                        self.expect_op(')')?;
                        Ok(Node::Call(func, Box::new(arg)))
                    }
                }
            }
            Some(Tok::Op(c)) => Err(format!("unexpected `{c}`")),
            None => Err("unexpected end of expression".into()),
        }
    }

    fn piecewise(&mut self) -> PResult<Node> {
        self.expect_op('(')?;
        let mut branches = vec![self.expr()?];
        let mut breaks = Vec::new();
        while self.eat_op(',') {
            let b = self.constant_arg()?;
            if let Some(&last) = breaks.last() {
                if b <= last {
                    return Err("piecewise breakpoints must be strictly increasing".into());
                }
            }
            breaks.push(b);
            self.expect_op(',')?;
            branches.push(self.expr()?);
        }
        self.expect_op(')')?;
        if breaks.is_empty() {
            return Err("piecewise needs at least one breakpoint".into());
        }
        Ok(Node::Piecewise { breaks, branches })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: f64) -> f64 {
        Expr::parse(s).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("-x^2", 3.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("(1 - x) / 2", 0.5), 0.25);
        assert_eq!(ev("x^-1", 4.0), 0.25);
        assert_eq!(ev("x^3", -2.0), -8.0);
    }

    #[test]
    fn functions_and_constants() {
        assert!((ev("ln(e)", 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(ev("exp(0)", 0.0), 1.0);
        assert_eq!(ev("x/(1+|x|)", -1.0), -0.5);
        assert_eq!(ev("abs(x)", -2.0), 2.0);
        assert_eq!(ev("sqrt(x)", 9.0), 3.0);
        assert!(ev("sin(pi)", 0.0).abs() < 1e-15);
        assert_eq!(ev("1e-3 * x", 2.0), 0.002);
    }

    #[test]
    fn piecewise_by_interval() {
        let e = Expr::parse("piecewise(-x, 0, x^2, 1, 2*x - 1)").unwrap();
        assert_eq!(e.eval(-2.0), 2.0);
        assert_eq!(e.eval(0.5), 0.25);
        assert_eq!(e.eval(1.0), 1.0);
        assert_eq!(e.eval(3.0), 5.0);
    }

    #[test]
    fn rejects_variable_exponent_and_unknown_names() {
        assert!(Expr::parse("x^x").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("piecewise(x, 1, x, 0, x)").is_err());
        assert!(Expr::parse("x $ 2").is_err());
    }

    #[test]
    fn reflection() {
        let e = Expr::parse("ln(x) + 2*x^3").unwrap();
        let r = e.reflected(true).unwrap();
        for x in [-3.0, -0.5] {
            assert!((r.eval(x) + e.eval(-x)).abs() < 1e-12);
        }
        assert!(Expr::parse("piecewise(x, 0, 1)").unwrap().reflected(false).is_none());
    }

    #[test]
    fn source_is_preserved() {
        let e = Expr::parse("2*x").unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), "\"2*x\"");
        assert!(Expr::parse("3").unwrap().is_constant());
        assert!(!e.is_constant());
    }
}
