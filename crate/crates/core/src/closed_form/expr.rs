//! Integer index expressions used for summation bounds and factor arguments.
//!
//! Grammar: sums and differences of products of integers, identifiers,
//! parenthesized expressions and `max(..)`/`min(..)` calls. Identifiers may
//! carry trailing primes (`l'`), and unary minus is allowed.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Max(Vec<Expr>),
    Min(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{source_text}` at byte {position}: {message}")]
pub struct ExprError {
    pub source_text: String,
    pub position: usize,
    pub message: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src, bytes: src.as_bytes(), pos: 0 };
        let e = p.sum()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Identifiers referenced anywhere in the expression.
    pub fn vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(v) => {
                out.insert(v.as_str());
            }
            Expr::Neg(a) => a.collect(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Expr::Max(xs) | Expr::Min(xs) => xs.iter().for_each(|x| x.collect(out)),
        }
    }

    /// Replaces identifiers by slot numbers.
    pub(crate) fn resolve(&self, slot_of: &dyn Fn(&str) -> Option<usize>) -> Result<Node, String> {
        Ok(match self {
            Expr::Int(n) => Node::Int(*n),
            Expr::Var(v) => Node::Var(slot_of(v).ok_or_else(|| v.clone())?),
            Expr::Neg(a) => Node::Neg(Box::new(a.resolve(slot_of)?)),
            Expr::Add(a, b) => Node::Add(Box::new(a.resolve(slot_of)?), Box::new(b.resolve(slot_of)?)),
            Expr::Sub(a, b) => Node::Sub(Box::new(a.resolve(slot_of)?), Box::new(b.resolve(slot_of)?)),
            Expr::Mul(a, b) => Node::Mul(Box::new(a.resolve(slot_of)?), Box::new(b.resolve(slot_of)?)),
            Expr::Max(xs) => Node::Max(xs.iter().map(|x| x.resolve(slot_of)).collect::<Result<_, _>>()?),
            Expr::Min(xs) => Node::Min(xs.iter().map(|x| x.resolve(slot_of)).collect::<Result<_, _>>()?),
        })
    }
}

impl core::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, name: &str, xs: &[Expr]) -> fmt::Result {
            write!(f, "{name}(")?;
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        }
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "{a}+{b}"),
            Expr::Sub(a, b) => match **b {
                Expr::Add(..) | Expr::Sub(..) => write!(f, "{a}-({b})"),
                _ => write!(f, "{a}-{b}"),
            },
            Expr::Mul(a, b) => {
                let wrap = |e: &Expr| matches!(e, Expr::Add(..) | Expr::Sub(..));
                if wrap(a) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                f.write_str("*")?;
                if wrap(b) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Max(xs) => list(f, "max", xs),
            Expr::Min(xs) => list(f, "min", xs),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError { source_text: self.src.to_string(), position: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&alloc::format!("expected `{}`", c as char)))
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                self.src[start..self.pos].parse().map(Expr::Int).map_err(|_| self.error("integer overflow"))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                while self.pos < self.bytes.len() && self.bytes[self.pos] == b'\'' {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if (name == "max" || name == "min") && self.peek() == Some(b'(') {
                    self.pos += 1;
                    let mut args = alloc::vec![self.sum()?];
                    while self.peek() == Some(b',') {
                        self.pos += 1;
                        args.push(self.sum()?);
                    }
                    self.expect(b')')?;
                    return Ok(if name == "max" { Expr::Max(args) } else { Expr::Min(args) });
                }
                Ok(Expr::Var(name.to_string()))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Expression with identifiers resolved to index slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Node {
    Int(i64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Max(Vec<Node>),
    Min(Vec<Node>),
}

impl Node {
    #[inline]
    pub(crate) fn eval(&self, env: &[i64]) -> i64 {
        match self {
            Node::Int(n) => *n,
            Node::Var(k) => env[*k],
            Node::Neg(a) => -a.eval(env),
            Node::Add(a, b) => a.eval(env) + b.eval(env),
            Node::Sub(a, b) => a.eval(env) - b.eval(env),
            Node::Mul(a, b) => a.eval(env) * b.eval(env),
            Node::Max(xs) => xs.iter().map(|x| x.eval(env)).max().unwrap_or(0),
            Node::Min(xs) => xs.iter().map(|x| x.eval(env)).min().unwrap_or(0),
        }
    }

    /// Highest slot referenced, if any.
    pub(crate) fn deepest(&self) -> Option<usize> {
        match self {
            Node::Int(_) => None,
            Node::Var(k) => Some(*k),
            Node::Neg(a) => a.deepest(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => a.deepest().max(b.deepest()),
            Node::Max(xs) | Node::Min(xs) => xs.iter().filter_map(Node::deepest).max(),
        }
    }
}
