use std::collections::HashMap;
use std::sync::Arc;

use super::build::{self, constant};
use super::Node;

/// Derivative with respect to variable `var`. Shared subtrees are
/// differentiated once, so the result keeps the sharing of the input.
pub(super) fn derivative(node: &Arc<Node>, var: usize) -> Arc<Node> {
    let mut memo = HashMap::new();
    go(node, var, &mut memo)
}

fn go(node: &Arc<Node>, var: usize, memo: &mut HashMap<*const Node, Arc<Node>>) -> Arc<Node> {
    let key = Arc::as_ptr(node);
    if let Some(d) = memo.get(&key) {
        return d.clone();
    }
    let d = match &**node {
        Node::Const(_) | Node::Pi => constant(0.0),
        Node::Var(i) => constant(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => build::neg(go(a, var, memo)),
        Node::Add(a, b) => build::add(go(a, var, memo), go(b, var, memo)),
        Node::Sub(a, b) => build::sub(go(a, var, memo), go(b, var, memo)),
        Node::Mul(a, b) => {
            let da = go(a, var, memo);
            let db = go(b, var, memo);
            build::add(build::mul(da, b.clone()), build::mul(a.clone(), db))
        }
        Node::Div(a, b) => {
            let da = go(a, var, memo);
            let db = go(b, var, memo);
            let num = build::sub(build::mul(da, b.clone()), build::mul(a.clone(), db));
            build::div(num, build::pow(b.clone(), 2))
        }
        Node::Pow(a, n) => {
            let da = go(a, var, memo);
            let inner = build::mul(constant(*n as f64), build::pow(a.clone(), n - 1));
            build::mul(inner, da)
        }
        Node::Sin(a) => build::mul(build::cos(a.clone()), go(a, var, memo)),
        Node::Cos(a) => build::neg(build::mul(build::sin(a.clone()), go(a, var, memo))),
        Node::Exp(a) => build::mul(node.clone(), go(a, var, memo)),
    };
    memo.insert(key, d.clone());
    d
}
