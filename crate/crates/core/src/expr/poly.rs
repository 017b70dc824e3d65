use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use super::build;
use super::{Expression, Node};

/// Sparse multivariate polynomial with real coefficients, keyed by exponent vectors.
///
/// Polynomials are closed under differentiation and products, so iterated
/// brackets of polynomial fields stay compact in this form where the
/// expression tree would grow multiplicatively.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(c: f64, nvars: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.insert(vec![0; nvars], c);
        p
    }

    pub fn var(index: usize, nvars: usize) -> Self {
        let mut e = vec![0; nvars];
        e[index] = 1;
        let mut p = Self::zero(nvars);
        p.insert(e, 1.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn insert(&mut self, exps: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if *slot.get() == 0.0 {
                    slot.remove();
                }
            }
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            out.insert(e.clone(), v * c);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(1.0, self.nvars);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.insert(d, c * e[var] as f64);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let max_deg = self.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0) as usize;
        let mut powers = vec![vec![1.0; max_deg + 1]; self.nvars];
        for (i, row) in powers.iter_mut().enumerate() {
            for k in 1..=max_deg {
                row[k] = row[k - 1] * x[i];
            }
        }
        self.terms.iter().map(|(e, c)| e.iter().enumerate().fold(*c, |acc, (i, &k)| acc * powers[i][k as usize])).sum()
    }

    pub(crate) fn from_node(node: &Node, nvars: usize) -> Option<Self> {
        Some(match node {
            Node::Const(c) => Self::constant(*c, nvars),
            Node::Pi => Self::constant(std::f64::consts::PI, nvars),
            Node::Var(i) => Self::var(*i, nvars),
            Node::Neg(a) => Self::from_node(a, nvars)?.scale(-1.0),
            Node::Add(a, b) => &Self::from_node(a, nvars)? + &Self::from_node(b, nvars)?,
            Node::Sub(a, b) => &Self::from_node(a, nvars)? - &Self::from_node(b, nvars)?,
            Node::Mul(a, b) => &Self::from_node(a, nvars)? * &Self::from_node(b, nvars)?,
            Node::Div(a, b) => {
                let d = b.const_value()?;
                if d == 0.0 {
                    return None;
                }
                Self::from_node(a, nvars)?.scale(1.0 / d)
            }
            Node::Pow(a, n) if *n >= 0 => Self::from_node(a, nvars)?.pow(*n as u32),
            _ => {
                let c = node.const_value()?;
                Self::constant(c, nvars)
            }
        })
    }

    /// Expression tree for this polynomial, terms in exponent order.
    pub fn to_expression(&self, vars: Arc<[String]>) -> Expression {
        assert_eq!(vars.len(), self.nvars);
        let mut sum = build::constant(0.0);
        for (e, c) in &self.terms {
            let mut term = build::constant(*c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = build::mul(term, build::pow(Arc::new(Node::Var(i)), k as i32));
                }
            }
            sum = build::add(sum, term);
        }
        Expression::from_node(sum, vars)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert(e.clone(), -*c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    // multiplying monomials adds their exponents
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(e, ca * cb);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XYZ: [&str; 3] = ["x", "y", "z"];

    #[test]
    fn converts_polynomial_expressions() {
        let e = Expression::parse("(1 - 2*x^2) * (y + z/2) - pi*x*y", &XYZ).unwrap();
        let p = e.to_polynomial().unwrap();
        assert_eq!(p.degree(), 3);
        let back = p.to_expression(e.shared_vars());
        for pt in [[0.3, -0.2, 0.9], [1.0, 2.0, -3.0]] {
            let want = e.eval(&pt).unwrap();
            assert!((p.eval(&pt) - want).abs() < 1e-12);
            assert!((back.eval(&pt).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn transcendental_and_rational_forms_are_rejected() {
        for src in ["sin(x)", "1/x", "x^-1", "exp(y)*x"] {
            assert!(Expression::parse(src, &XYZ).unwrap().to_polynomial().is_none(), "{src}");
        }
        // constant subtrees still fold
        assert!(Expression::parse("cos(0)*x", &XYZ).unwrap().to_polynomial().is_some());
    }

    #[test]
    fn derivative_agrees_with_symbolic_path() {
        let e = Expression::parse("x^3*y - 4*z^2*x + 7", &XYZ).unwrap();
        let p = e.to_polynomial().unwrap();
        for (i, v) in XYZ.iter().enumerate() {
            let d = e.diff(v).unwrap();
            let pt = [0.7, -1.1, 0.4];
            assert!((p.derivative(i).eval(&pt) - d.eval(&pt).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn cancellation_removes_terms() {
        let x = Polynomial::var(0, 3);
        assert!((&x - &x).is_zero());
        assert_eq!(
            (&x - &x).to_expression(Arc::from(vec!["x".into(), "y".into(), "z".into()])).const_value(),
            Some(0.0)
        );
    }
}
