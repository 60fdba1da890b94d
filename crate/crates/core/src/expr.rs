//! Smooth scalar expressions over named chart coordinates.
//!
//! Grammar:
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := base ('^' exponent)?
//! exponent := factor
//! base     := number | ident | func '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! `^` is right associative and binds tighter than unary minus only through
//! `base`, so `-x^2` reads as `(-x)^2`. Identifiers match `[A-Za-z][A-Za-z0-9]*`
//! and must be a coordinate name, a builtin function (`sin cos exp log sqrt`)
//! or the constant `pi`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn bin(op: BinOp, a: Node, b: Node) -> Node {
        Node::Bin(op, Box::new(a), Box::new(b))
    }

    fn has_vars(&self) -> bool {
        match self {
            Node::Num(_) | Node::Pi => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::Call(_, a) => a.has_vars(),
            Node::Bin(_, a, b) => a.has_vars() || b.has_vars(),
        }
    }

    fn shift_vars(&self, offset: usize) -> Node {
        match self {
            Node::Var(i) => Node::Var(i + offset),
            Node::Num(_) | Node::Pi => self.clone(),
            Node::Neg(a) => Node::Neg(Box::new(a.shift_vars(offset))),
            Node::Call(f, a) => Node::Call(*f, Box::new(a.shift_vars(offset))),
            Node::Bin(op, a, b) => Node::bin(*op, a.shift_vars(offset), b.shift_vars(offset)),
        }
    }

    fn substitute(&self, with: &[Node]) -> Node {
        match self {
            Node::Var(i) => with[*i].clone(),
            Node::Num(_) | Node::Pi => self.clone(),
            Node::Neg(a) => Node::Neg(Box::new(a.substitute(with))),
            Node::Call(f, a) => Node::Call(*f, Box::new(a.substitute(with))),
            Node::Bin(op, a, b) => Node::bin(*op, a.substitute(with), b.substitute(with)),
        }
    }
}

/// A parsed expression together with the ordered coordinate names it ranges over.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldExpr {
    ast: Arc<Node>,
    vars: Arc<[String]>,
}

fn valid_ident(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric())
}

fn check_vars(vars: &[String]) -> Result<()> {
    for (i, v) in vars.iter().enumerate() {
        if !valid_ident(v) || Func::from_name(v).is_some() || v == "pi" {
            return Err(Error::config(
                format!("vars[{i}]"),
                format!("`{v}` is not a usable coordinate name"),
            ));
        }
        if vars[..i].contains(v) {
            return Err(Error::config(format!("vars[{i}]"), format!("duplicate `{v}`")));
        }
    }
    Ok(())
}

/// Parses `src` over the coordinates `vars`.
pub fn parse<S: AsRef<str>>(src: &str, vars: &[S]) -> Result<ScalarFieldExpr> {
    let vars: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
    check_vars(&vars)?;
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        vars: &vars,
    };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected input after expression"));
    }
    Ok(ScalarFieldExpr {
        ast: Arc::new(ast),
        vars: vars.into(),
    })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Node::bin(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.base()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.syntax("expected a number, identifier or `(`")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let before = self.pos;
            digits(self);
            if self.pos == before {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Node::Num).map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if let Some(func) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.syntax("expected `(` after function name"));
            }
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.peek() == Some(b',') {
                self.pos += 1;
                args.push(self.expr()?);
            }
            if self.peek() != Some(b')') {
                return Err(self.syntax("expected `)`"));
            }
            self.pos += 1;
            if args.len() != 1 {
                return Err(Error::Arity {
                    name: name.to_string(),
                    expected: 1,
                    found: args.len(),
                    offset: start,
                });
            }
            return Ok(Node::Call(func, Box::new(args.pop().unwrap())));
        }
        if name == "pi" {
            return Ok(Node::Pi);
        }
        match self.vars.iter().position(|v| v == name) {
            Some(i) => Ok(Node::Var(i)),
            None => Err(Error::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            }),
        }
    }
}

/// Arithmetic both the f64 and the jet evaluators share.
trait Scalar: Sized + Clone {
    fn num(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn powi(&self, n: i32) -> Result<Self>;
    fn powf(&self, r: f64) -> Result<Self>;
    fn call(&self, f: Func) -> Result<Self>;
}

impl Scalar for f64 {
    fn num(&self, v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Result<Self> {
        if *o == 0.0 {
            return Err(Error::Domain {
                op: "division",
                value: *o,
            });
        }
        Ok(self / o)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, n: i32) -> Result<Self> {
        if n < 0 && *self == 0.0 {
            return Err(Error::Domain {
                op: "division",
                value: 0.0,
            });
        }
        Ok(f64::powi(*self, n))
    }
    fn powf(&self, r: f64) -> Result<Self> {
        if *self <= 0.0 {
            return Err(Error::Domain {
                op: "real power",
                value: *self,
            });
        }
        Ok(f64::powf(*self, r))
    }
    fn call(&self, f: Func) -> Result<Self> {
        let x = *self;
        Ok(match f {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(Error::Domain { op: "log", value: x });
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(Error::Domain { op: "sqrt", value: x });
                }
                x.sqrt()
            }
        })
    }
}

impl Scalar for Jet {
    fn num(&self, v: f64) -> Self {
        Jet::constant(self.dim(), self.order(), v)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Result<Self> {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, n: i32) -> Result<Self> {
        Jet::powi(self, n)
    }
    fn powf(&self, r: f64) -> Result<Self> {
        Jet::powf(self, r)
    }
    fn call(&self, f: Func) -> Result<Self> {
        match f {
            Func::Sin => Ok(self.sin()),
            Func::Cos => Ok(self.cos()),
            Func::Exp => Ok(self.exp()),
            Func::Log => self.ln(),
            Func::Sqrt => self.sqrt(),
        }
    }
}

fn constant_value(node: &Node) -> Option<f64> {
    if node.has_vars() {
        return None;
    }
    eval_node::<f64>(node, &[], &0.0).ok()
}

fn eval_node<S: Scalar>(node: &Node, inputs: &[S], proto: &S) -> Result<S> {
    Ok(match node {
        Node::Num(v) => proto.num(*v),
        Node::Pi => proto.num(std::f64::consts::PI),
        Node::Var(i) => inputs[*i].clone(),
        Node::Neg(a) => eval_node(a, inputs, proto)?.neg(),
        Node::Call(f, a) => eval_node(a, inputs, proto)?.call(*f)?,
        Node::Bin(op, a, b) => {
            if *op == BinOp::Pow {
                let base = eval_node(a, inputs, proto)?;
                return match constant_value(b) {
                    Some(c) if c.fract() == 0.0 && c.abs() <= 64.0 => base.powi(c as i32),
                    Some(c) => base.powf(c),
                    None => {
                        let e = eval_node(b, inputs, proto)?;
                        if base.value() <= 0.0 {
                            return Err(Error::Domain {
                                op: "real power",
                                value: base.value(),
                            });
                        }
                        e.mul(&base.call(Func::Log)?).call(Func::Exp)
                    }
                };
            }
            let x = eval_node(a, inputs, proto)?;
            let y = eval_node(b, inputs, proto)?;
            match op {
                BinOp::Add => x.add(&y),
                BinOp::Sub => x.sub(&y),
                BinOp::Mul => x.mul(&y),
                BinOp::Div => x.div(&y)?,
                BinOp::Pow => unreachable!(),
            }
        }
    })
}

impl ScalarFieldExpr {
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.arity() {
            return Err(Error::DimensionMismatch {
                expected: self.arity(),
                found: point.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        eval_node(&self.ast, point, &0.0)
    }

    /// All partials up to total degree `order` at `point`.
    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        self.check_point(point)?;
        if order > MAX_ORDER {
            return Err(Error::OrderOutOfRange { order, max: MAX_ORDER });
        }
        let inputs = Jet::coordinates(point, order)?;
        let proto = Jet::constant(point.len().max(1), order, 0.0);
        if inputs.is_empty() {
            return eval_node(&self.ast, &inputs, &proto);
        }
        eval_node(&self.ast, &inputs, &inputs[0])
    }

    /// Evaluates with an arbitrary jet substituted for each coordinate.
    pub fn eval_with(&self, inputs: &[Jet]) -> Result<Jet> {
        if inputs.len() != self.arity() {
            return Err(Error::DimensionMismatch {
                expected: self.arity(),
                found: inputs.len(),
            });
        }
        let proto = inputs.first().cloned().expect("at least one coordinate");
        eval_node(&self.ast, inputs, &proto)
    }

    pub fn is_constant(&self) -> bool {
        !self.ast.has_vars()
    }

    pub fn constant(value: f64, vars: &[String]) -> ScalarFieldExpr {
        ScalarFieldExpr {
            ast: Arc::new(Node::Num(value)),
            vars: vars.into(),
        }
    }

    fn with_node(&self, node: Node) -> ScalarFieldExpr {
        ScalarFieldExpr {
            ast: Arc::new(node),
            vars: self.vars.clone(),
        }
    }

    fn binary(&self, op: BinOp, other: &ScalarFieldExpr) -> ScalarFieldExpr {
        assert_eq!(self.vars, other.vars, "combining expressions over different charts");
        self.with_node(Node::bin(op, (*self.ast).clone(), (*other.ast).clone()))
    }

    pub fn mul(&self, other: &ScalarFieldExpr) -> ScalarFieldExpr {
        self.binary(BinOp::Mul, other)
    }

    pub fn add(&self, other: &ScalarFieldExpr) -> ScalarFieldExpr {
        self.binary(BinOp::Add, other)
    }

    pub fn scaled(&self, factor: f64) -> ScalarFieldExpr {
        self.with_node(Node::bin(BinOp::Mul, Node::Num(factor), (*self.ast).clone()))
    }

    pub fn squared(&self) -> ScalarFieldExpr {
        self.with_node(Node::bin(BinOp::Pow, (*self.ast).clone(), Node::Num(2.0)))
    }

    pub fn sqrt(&self) -> ScalarFieldExpr {
        self.with_node(Node::Call(Func::Sqrt, Box::new((*self.ast).clone())))
    }

    pub fn ln(&self) -> ScalarFieldExpr {
        self.with_node(Node::Call(Func::Log, Box::new((*self.ast).clone())))
    }

    /// Re-expresses over a larger coordinate list where this chart's
    /// coordinates start at `offset`.
    pub fn embed(&self, vars: &[String], offset: usize) -> ScalarFieldExpr {
        assert!(offset + self.arity() <= vars.len());
        ScalarFieldExpr {
            ast: Arc::new(self.ast.shift_vars(offset)),
            vars: vars.into(),
        }
    }

    /// Composes with `inner`: coordinate `i` of this expression becomes `inner[i]`.
    pub fn substitute(&self, inner: &[ScalarFieldExpr]) -> ScalarFieldExpr {
        assert_eq!(inner.len(), self.arity());
        let vars = inner
            .first()
            .map(|e| e.vars.clone())
            .unwrap_or_else(|| self.vars.clone());
        let nodes: Vec<Node> = inner.iter().map(|e| (*e.ast).clone()).collect();
        ScalarFieldExpr {
            ast: Arc::new(self.ast.substitute(&nodes)),
            vars,
        }
    }
}

struct Printer<'a> {
    node: &'a Node,
    vars: &'a [String],
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |node| Printer { node, vars: self.vars };
        match self.node {
            Node::Num(v) if *v < 0.0 => write!(f, "(-{})", -v),
            Node::Num(v) => write!(f, "{v}"),
            Node::Pi => write!(f, "pi"),
            Node::Var(i) => write!(f, "{}", self.vars[*i]),
            Node::Neg(a) => write!(f, "(-{})", sub(a)),
            Node::Call(func, a) => write!(f, "{}({})", func.name(), sub(a)),
            Node::Bin(op, a, b) => write!(f, "({}{}{})", sub(a), op.symbol(), sub(b)),
        }
    }
}

impl fmt::Display for ScalarFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer {
            node: &self.ast,
            vars: &self.vars,
        }
        .fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval_examples() {
        let e = parse("2+sin(y1)", &["y1"]).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 2.0);
        let e = parse("x1^2*exp(x2)", &["x1", "x2"]).unwrap();
        assert_eq!(e.eval(&[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn syntax_error_offset() {
        let err = parse("2+*x1", &["x1"]).unwrap_err();
        assert!(matches!(err, Error::Syntax { offset: 2, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier_and_arity() {
        assert!(matches!(
            parse("x1 + z", &["x1"]),
            Err(Error::UnknownIdentifier { offset: 5, .. })
        ));
        assert!(matches!(
            parse("sin(x1, x1)", &["x1"]),
            Err(Error::Arity { found: 2, .. })
        ));
        assert!(parse("sin x1", &["x1"]).is_err());
        assert!(parse("(x1", &["x1"]).is_err());
        assert!(parse("x1 x1", &["x1"]).is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("2^3^2", &["x"]).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 512.0);
        let e = parse("-x^2", &["x"]).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), 9.0);
        let e = parse("1-2-3", &["x"]).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), -4.0);
        let e = parse("8/2/2", &["x"]).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 2.0);
        let e = parse("2*pi", &["x"]).unwrap();
        assert!((e.eval(&[0.0]).unwrap() - std::f64::consts::TAU).abs() < 1e-15);
        let e = parse("1.5e-1 + .5", &["x"]).unwrap();
        assert!((e.eval(&[0.0]).unwrap() - 0.65).abs() < 1e-15);
    }

    #[test]
    fn jets_of_examples() {
        let e = parse("x1^2", &["x1"]).unwrap();
        let j = e.eval_jet(&[3.0], 2).unwrap();
        assert_eq!((j.value(), j.partial(&[1]), j.partial(&[2])), (9.0, 6.0, 2.0));
        let e = parse("x1*x2", &["x1", "x2"]).unwrap();
        assert_eq!(e.eval_jet(&[5.0, 7.0], 2).unwrap().partial(&[1, 1]), 1.0);
        assert!(matches!(e.eval_jet(&[5.0, 7.0], 5), Err(Error::OrderOutOfRange { .. })));
    }

    #[test]
    fn domain_errors_surface() {
        let e = parse("log(x)", &["x"]).unwrap();
        assert!(matches!(e.eval_jet(&[-1.0], 2), Err(Error::Domain { .. })));
        assert!(matches!(e.eval(&[0.0]), Err(Error::Domain { .. })));
        let e = parse("sqrt(x)", &["x"]).unwrap();
        assert!(e.eval_jet(&[0.0], 1).is_err());
        let e = parse("x^0.5", &["x"]).unwrap();
        assert!(e.eval_jet(&[-2.0], 1).is_err());
        let e = parse("x^3", &["x"]).unwrap();
        assert_eq!(e.eval(&[-2.0]).unwrap(), -8.0);
    }

    #[test]
    fn variable_exponent() {
        let e = parse("x^y", &["x", "y"]).unwrap();
        let j = e.eval_jet(&[2.0, 3.0], 1).unwrap();
        assert!((j.value() - 8.0).abs() < 1e-12);
        assert!((j.partial(&[1, 0]) - 12.0).abs() < 1e-12);
        assert!((j.partial(&[0, 1]) - 8.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn print_round_trip() {
        let vars = ["x1", "x2"];
        for src in ["-x1^2+3*sin(x2)/exp(x1)", "2^-x1", "(x1-x2)*(x1+x2)", "sqrt(1+x1^2)"] {
            let a = parse(src, &vars).unwrap();
            let b = parse(&a.to_string(), &vars).unwrap();
            assert_eq!(a.ast(), b.ast(), "{src} -> {a}");
        }
    }

    #[test]
    fn embed_and_substitute() {
        let e = parse("y1*y1", &["y1"]).unwrap();
        let vars: Vec<String> = ["x1", "y1"].iter().map(|s| s.to_string()).collect();
        let lifted = e.embed(&vars, 1);
        assert_eq!(lifted.eval(&[7.0, 3.0]).unwrap(), 9.0);
        let inner = parse("2*x", &["x"]).unwrap();
        let comp = e.substitute(&[inner]);
        assert_eq!(comp.eval(&[1.5]).unwrap(), 9.0);
    }

    #[test]
    fn bad_vars_rejected() {
        assert!(parse("1", &["sin"]).is_err());
        assert!(parse("1", &["x", "x"]).is_err());
        assert!(parse("1", &["1x"]).is_err());
    }
}
