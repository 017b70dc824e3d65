//! Closed-form scalar expressions over manifold coordinates.
//!
//! Expressions are built from decimal literals, `pi`, declared coordinate
//! names, `+ - * /`, integer powers and `sin`, `cos`, `exp`. The function
//! set is closed under [`Expression::diff`], which is what lets brackets of
//! analytic fields stay exact.
//!
//! ```
//! use symprig::expr::Expression;
//!
//! let f = Expression::parse("1-2*x^2", &["x", "y", "z"]).unwrap();
//! assert_eq!(f.eval(&[1.0, 0.0, 0.0]).unwrap(), -1.0);
//! let df = f.diff("x").unwrap();
//! assert_eq!(df.eval(&[0.5, 0.0, 0.0]).unwrap(), -2.0);
//! ```

mod diff;
mod parse;
mod poly;

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

pub use poly::Polynomial;

/// Errors raised while parsing or evaluating expressions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("expression evaluated to a non-finite value")]
    NonFinite,
    #[error("point has {got} coordinates but the expression is over {expected}")]
    Arity { expected: usize, got: usize },
}

/// A node of the expression tree. Children are shared, so cloning a tree is cheap.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Pi,
    Var(usize),
    Neg(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Pow(Arc<Node>, i32),
    Sin(Arc<Node>),
    Cos(Arc<Node>),
    Exp(Arc<Node>),
}

impl Node {
    /// Value of a node that contains no variables.
    pub fn const_value(&self) -> Option<f64> {
        match self {
            Node::Const(c) => Some(*c),
            Node::Pi => Some(std::f64::consts::PI),
            Node::Var(_) => None,
            Node::Neg(a) => a.const_value().map(|v| -v),
            Node::Add(a, b) => Some(a.const_value()? + b.const_value()?),
            Node::Sub(a, b) => Some(a.const_value()? - b.const_value()?),
            Node::Mul(a, b) => Some(a.const_value()? * b.const_value()?),
            Node::Div(a, b) => Some(a.const_value()? / b.const_value()?),
            Node::Pow(a, n) => Some(a.const_value()?.powi(*n)),
            Node::Sin(a) => a.const_value().map(f64::sin),
            Node::Cos(a) => a.const_value().map(f64::cos),
            Node::Exp(a) => a.const_value().map(f64::exp),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Node::Const(c) if *c == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Node::Const(c) if *c == 1.0)
    }
}

/// Calls `f` once on every distinct node reachable from `node`.
fn visit(node: &Arc<Node>, seen: &mut HashSet<*const Node>, f: &mut impl FnMut(&Node)) {
    if !seen.insert(Arc::as_ptr(node)) {
        return;
    }
    f(node);
    match &**node {
        Node::Const(_) | Node::Pi | Node::Var(_) => {}
        Node::Neg(a) | Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => visit(a, seen, f),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            visit(a, seen, f);
            visit(b, seen, f);
        }
    }
}

/// Constant-folding node constructors shared by differentiation and the
/// public builder methods.
pub(crate) mod build {
    use super::Node;
    use std::sync::Arc;

    pub fn constant(c: f64) -> Arc<Node> {
        Arc::new(Node::Const(c))
    }

    pub fn add(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        match (a.const_value(), b.const_value()) {
            (Some(x), Some(y)) => constant(x + y),
            _ => Arc::new(Node::Add(a, b)),
        }
    }

    pub fn sub(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return neg(b);
        }
        match (a.const_value(), b.const_value()) {
            (Some(x), Some(y)) => constant(x - y),
            _ => Arc::new(Node::Sub(a, b)),
        }
    }

    pub fn neg(a: Arc<Node>) -> Arc<Node> {
        if let Some(c) = a.const_value() {
            return constant(-c);
        }
        match &*a {
            Node::Neg(inner) => inner.clone(),
            Node::Mul(l, r) => match l.const_value() {
                Some(c) => Arc::new(Node::Mul(constant(-c), r.clone())),
                None => Arc::new(Node::Neg(a)),
            },
            _ => Arc::new(Node::Neg(a)),
        }
    }

    pub fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        if a.is_zero() || b.is_zero() {
            return constant(0.0);
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        match (a.const_value(), b.const_value()) {
            (Some(x), Some(y)) => constant(x * y),
            (None, Some(_)) => mul(b, a),
            (Some(x), None) => match &*b {
                Node::Mul(l, r) => match l.const_value() {
                    Some(y) => mul(constant(x * y), r.clone()),
                    None => Arc::new(Node::Mul(constant(x), b)),
                },
                Node::Neg(inner) => mul(constant(-x), inner.clone()),
                _ => Arc::new(Node::Mul(constant(x), b)),
            },
            (None, None) => Arc::new(Node::Mul(a, b)),
        }
    }

    pub fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        if a.is_zero() {
            return constant(0.0);
        }
        if b.is_one() {
            return a;
        }
        match (a.const_value(), b.const_value()) {
            (Some(x), Some(y)) if y != 0.0 => constant(x / y),
            (None, Some(y)) if y != 0.0 => mul(constant(1.0 / y), a),
            _ => Arc::new(Node::Div(a, b)),
        }
    }

    pub fn pow(a: Arc<Node>, n: i32) -> Arc<Node> {
        if n == 0 {
            return constant(1.0);
        }
        if n == 1 {
            return a;
        }
        match a.const_value() {
            Some(c) => constant(c.powi(n)),
            None => Arc::new(Node::Pow(a, n)),
        }
    }

    pub fn sin(a: Arc<Node>) -> Arc<Node> {
        match a.const_value() {
            Some(c) => constant(c.sin()),
            None => Arc::new(Node::Sin(a)),
        }
    }

    pub fn cos(a: Arc<Node>) -> Arc<Node> {
        match a.const_value() {
            Some(c) => constant(c.cos()),
            None => Arc::new(Node::Cos(a)),
        }
    }
}

/// A parsed expression together with the ordered coordinate names it is over.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Arc<Node>,
    vars: Arc<[String]>,
    tape: Arc<OnceLock<Tape>>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && (Arc::ptr_eq(&self.root, &other.root) || self.root == other.root)
    }
}

impl Expression {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self, ExprError> {
        let vars: Arc<[String]> = vars.iter().map(|v| v.to_string()).collect();
        let root = parse::parse(source, &vars)?;
        Ok(Self::from_node(root, vars))
    }

    pub fn constant(c: f64, vars: &[&str]) -> Self {
        Self::from_node(build::constant(c), vars.iter().map(|v| v.to_string()).collect())
    }

    pub fn variable(name: &str, vars: &[&str]) -> Result<Self, ExprError> {
        let index =
            vars.iter().position(|v| *v == name).ok_or_else(|| ExprError::UnknownIdentifier(name.to_string()))?;
        Ok(Self::from_node(Arc::new(Node::Var(index)), vars.iter().map(|v| v.to_string()).collect()))
    }

    pub(crate) fn from_node(root: Arc<Node>, vars: Arc<[String]>) -> Self {
        Self { root, vars, tape: Arc::new(OnceLock::new()) }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    #[cfg(test)]
    pub(crate) fn shared_vars(&self) -> Arc<[String]> {
        self.vars.clone()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Number of distinct nodes; shared subexpressions count once.
    pub fn size(&self) -> usize {
        let mut seen = HashSet::new();
        visit(&self.root, &mut seen, &mut |_| {});
        seen.len()
    }

    pub fn const_value(&self) -> Option<f64> {
        self.root.const_value()
    }

    pub fn depends_on(&self, name: &str) -> bool {
        let Some(index) = self.var_index(name) else {
            return false;
        };
        let mut found = false;
        visit(&self.root, &mut HashSet::new(), &mut |n| found |= matches!(n, Node::Var(i) if *i == index));
        found
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        self.tape().eval(point)
    }

    /// The compiled form, built on first use and shared by clones.
    pub fn tape(&self) -> &Tape {
        self.tape.get_or_init(|| self.compile())
    }

    /// Flattens the expression into a straight-line program in which every
    /// shared subexpression is computed once.
    pub fn compile(&self) -> Tape {
        let mut ops = Vec::new();
        let mut slots = HashMap::new();
        emit(&self.root, &mut ops, &mut slots);
        Tape { ops, arity: self.vars.len() }
    }

    /// Symbolic partial derivative with constant folding.
    pub fn diff(&self, var: &str) -> Result<Self, ExprError> {
        let index = self.var_index(var).ok_or_else(|| ExprError::UnknownIdentifier(var.to_string()))?;
        Ok(Self::from_node(diff::derivative(&self.root, index), self.vars.clone()))
    }

    fn check_vars(&self, other: &Self) {
        assert_eq!(self.vars, other.vars, "expressions over different coordinates");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_vars(other);
        Self::from_node(build::add(self.root.clone(), other.root.clone()), self.vars.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_vars(other);
        Self::from_node(build::sub(self.root.clone(), other.root.clone()), self.vars.clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_vars(other);
        Self::from_node(build::mul(self.root.clone(), other.root.clone()), self.vars.clone())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_node(build::mul(build::constant(c), self.root.clone()), self.vars.clone())
    }

    pub fn neg(&self) -> Self {
        Self::from_node(build::neg(self.root.clone()), self.vars.clone())
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self::from_node(build::add(self.root.clone(), build::constant(c)), self.vars.clone())
    }

    /// Polynomial normal form, when the expression is a polynomial in its variables.
    pub fn to_polynomial(&self) -> Option<Polynomial> {
        Polynomial::from_node(&self.root, self.vars.len())
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, i32),
    Sin(usize),
    Cos(usize),
    Exp(usize),
}

/// Appends the program for `node` and returns the slot holding its value.
fn emit(node: &Arc<Node>, ops: &mut Vec<Op>, slots: &mut HashMap<*const Node, usize>) -> usize {
    if let Some(&slot) = slots.get(&Arc::as_ptr(node)) {
        return slot;
    }
    let op = match &**node {
        Node::Const(c) => Op::Const(*c),
        Node::Pi => Op::Const(std::f64::consts::PI),
        Node::Var(i) => Op::Var(*i),
        Node::Neg(a) => Op::Neg(emit(a, ops, slots)),
        Node::Pow(a, n) => Op::Pow(emit(a, ops, slots), *n),
        Node::Sin(a) => Op::Sin(emit(a, ops, slots)),
        Node::Cos(a) => Op::Cos(emit(a, ops, slots)),
        Node::Exp(a) => Op::Exp(emit(a, ops, slots)),
        Node::Add(a, b) => Op::Add(emit(a, ops, slots), emit(b, ops, slots)),
        Node::Sub(a, b) => Op::Sub(emit(a, ops, slots), emit(b, ops, slots)),
        Node::Mul(a, b) => Op::Mul(emit(a, ops, slots), emit(b, ops, slots)),
        Node::Div(a, b) => Op::Div(emit(a, ops, slots), emit(b, ops, slots)),
    };
    ops.push(op);
    slots.insert(Arc::as_ptr(node), ops.len() - 1);
    ops.len() - 1
}

/// A compiled expression: a straight-line program over value slots, one per
/// distinct node, the last slot holding the result.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    arity: usize,
}

impl Tape {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        thread_local! {
            static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
        }
        SCRATCH.with(|s| match s.try_borrow_mut() {
            Ok(mut slots) => self.eval_with(x, &mut slots),
            Err(_) => self.eval_with(x, &mut Vec::new()),
        })
    }

    /// Evaluates with a caller-provided scratch buffer, avoiding an
    /// allocation per call in hot loops.
    pub fn eval_with(&self, x: &[f64], slots: &mut Vec<f64>) -> Result<f64, ExprError> {
        if x.len() != self.arity {
            return Err(ExprError::Arity { expected: self.arity, got: x.len() });
        }
        slots.clear();
        slots.reserve(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(i) => x[i],
                Op::Neg(a) => -slots[a],
                Op::Add(a, b) => slots[a] + slots[b],
                Op::Sub(a, b) => slots[a] - slots[b],
                Op::Mul(a, b) => slots[a] * slots[b],
                Op::Div(a, b) => slots[a] / slots[b],
                Op::Pow(a, n) => slots[a].powi(n),
                Op::Sin(a) => slots[a].sin(),
                Op::Cos(a) => slots[a].cos(),
                Op::Exp(a) => slots[a].exp(),
            };
            slots.push(v);
        }
        let v = *slots.last().expect("a program has at least one op");
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }
}

// Printing. Levels: 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atoms.
fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, vars: &[String], min: u8) -> fmt::Result {
    let wrap = precedence(node) < min;
    if wrap {
        f.write_str("(")?;
    }
    match node {
        Node::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{})", -c)?,
        Node::Const(c) => write!(f, "{c}")?,
        Node::Pi => f.write_str("pi")?,
        Node::Var(i) => f.write_str(&vars[*i])?,
        Node::Neg(a) => {
            f.write_str("-")?;
            if matches!(**a, Node::Const(_)) {
                // keeps `-2` from re-parsing as a negative literal
                f.write_str("(")?;
                write_node(f, a, vars, 0)?;
                f.write_str(")")?;
            } else {
                write_node(f, a, vars, 3)?;
            }
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            write_node(f, a, vars, 1)?;
            f.write_str(if matches!(node, Node::Add(..)) { " + " } else { " - " })?;
            write_node(f, b, vars, 2)?;
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            write_node(f, a, vars, 2)?;
            f.write_str(if matches!(node, Node::Mul(..)) { " * " } else { " / " })?;
            write_node(f, b, vars, 3)?;
        }
        Node::Pow(a, n) => {
            write_node(f, a, vars, 5)?;
            write!(f, "^{n}")?;
        }
        Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
            let name = match node {
                Node::Sin(_) => "sin",
                Node::Cos(_) => "cos",
                _ => "exp",
            };
            write!(f, "{name}(")?;
            write_node(f, a, vars, 0)?;
            f.write_str(")")?;
        }
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.vars, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const XYZ: [&str; 3] = ["x", "y", "z"];
    const QP: [&str; 2] = ["q", "p"];

    fn node(src: &str, vars: &[&str]) -> Node {
        Expression::parse(src, vars).unwrap().root().clone()
    }

    #[test]
    fn parses_with_standard_precedence() {
        let x = Arc::new(Node::Var(0));
        let expected = Node::Sub(
            Arc::new(Node::Const(1.0)),
            Arc::new(Node::Mul(Arc::new(Node::Const(2.0)), Arc::new(Node::Pow(x, 2)))),
        );
        assert_eq!(node("1-2*x^2", &XYZ), expected);

        let q = Arc::new(Node::Var(0));
        let two_pi = Arc::new(Node::Mul(Arc::new(Node::Const(2.0)), Arc::new(Node::Pi)));
        assert_eq!(node("sin(2*pi*q)", &QP), Node::Sin(Arc::new(Node::Mul(two_pi, q))));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = Expression::parse("-x^2", &XYZ).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), -9.0);
        let e = Expression::parse("-2^2", &XYZ).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0, 0.0]).unwrap(), -4.0);
        let e = Expression::parse("(-2)^2", &XYZ).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0, 0.0]).unwrap(), 4.0);
    }

    #[test]
    fn rejects_undeclared_names() {
        assert_eq!(Expression::parse("1-2*w^2", &XYZ), Err(ExprError::UnknownIdentifier("w".into())));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match Expression::parse("1 + * x", &XYZ) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Expression::parse("sin(x", &XYZ), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expression::parse("x^2.5", &XYZ), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expression::parse("", &XYZ), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expression::parse("x y", &XYZ), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn evaluates_example_points() {
        let f = Expression::parse("1-2*x^2", &XYZ).unwrap();
        assert_eq!(f.eval(&[1.0, 0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(f.eval(&[0.0, 1.0, 0.0]).unwrap(), 1.0);
        let g = Expression::parse("2*z^2", &XYZ).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0, -1.0]).unwrap(), 2.0);
    }

    #[test]
    fn non_finite_and_arity_are_reported() {
        let f = Expression::parse("1/x", &XYZ).unwrap();
        assert_eq!(f.eval(&[0.0, 1.0, 0.0]), Err(ExprError::NonFinite));
        assert_eq!(f.compile().eval(&[0.0, 1.0, 0.0]), Err(ExprError::NonFinite));
        assert!(matches!(f.eval(&[1.0]), Err(ExprError::Arity { expected: 3, got: 1 })));
    }

    #[test]
    fn tape_matches_direct_arithmetic() {
        let f = Expression::parse("exp(-x^2) * cos(3*y) - z / (2 + sin(x*y))", &XYZ).unwrap();
        let tape = f.compile();
        for [x, y, z] in [[0.1f64, 0.2, 0.3], [-1.0, 0.5, 2.0], [0.0, 0.0, 0.0]] {
            let want = (-(x * x)).exp() * (3.0 * y).cos() - z / (2.0 + (x * y).sin());
            assert!((tape.eval(&[x, y, z]).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn shared_subexpressions_compile_once() {
        let x = Expression::variable("x", &XYZ).unwrap();
        let mut e = x.clone();
        for _ in 0..60 {
            e = e.mul(&e).add(&x);
        }
        // the expanded tree has ~2^60 nodes; the program stays linear
        assert!(e.size() < 200);
        assert!(e.compile().eval(&[0.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn power_rule_folds_to_linear_term() {
        let f = Expression::parse("1-2*x^2", &XYZ).unwrap();
        let d = f.diff("x").unwrap();
        assert_eq!(d.to_string(), "(-4) * x");
        assert_eq!(d, Expression::parse("(-4)*x", &XYZ).unwrap());
    }

    #[test]
    fn chain_rule_through_sine() {
        let f = Expression::parse("sin(2*pi*q)", &QP).unwrap();
        let d = f.diff("q").unwrap();
        for q in [0.0, 0.1, 0.37, 0.9] {
            let expected = 2.0 * PI * (2.0 * PI * q).cos();
            assert!((d.eval(&[q, 0.3]).unwrap() - expected).abs() < 1e-12);
        }
        assert_eq!(f.diff("p").unwrap().const_value(), Some(0.0));
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let c = Expression::parse("3*pi^2 + exp(1)", &XYZ).unwrap();
        assert_eq!(c.diff("y").unwrap().const_value(), Some(0.0));
        assert!(matches!(c.diff("w"), Err(ExprError::UnknownIdentifier(_))));
    }

    #[test]
    fn printing_reaches_a_fixed_point() {
        for src in [
            "1-2*x^2",
            "sin(2*pi*q)",
            "-(x - y) * -z",
            "x / (y / z) - (x - y) - z",
            "(-2)^3 + -(3) + x^-2",
            "exp(cos(x)^2) / 7.25e-3",
            "--x",
        ] {
            let vars: &[&str] = if src.contains('q') { &QP } else { &XYZ };
            let e = Expression::parse(src, vars).unwrap();
            let printed = e.to_string();
            let again = Expression::parse(&printed, vars).unwrap();
            assert_eq!(again, e, "{src} -> {printed}");
            assert_eq!(again.to_string(), printed);
        }
    }

    #[test]
    fn dependency_query() {
        let e = Expression::parse("sin(2*pi*q) + 0*p", &QP).unwrap();
        assert!(e.depends_on("q"));
        assert!(e.depends_on("p"));
        assert!(!Expression::parse("cos(q)", &QP).unwrap().depends_on("p"));
    }
}
