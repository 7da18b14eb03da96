//! Symbolic differentiation with light constant folding.

use super::{Func, Node};

fn is_const(n: &Node, v: f64) -> bool {
    matches!(n, Node::Const(c) if *c == v)
}

pub(crate) fn add(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x + y),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x - y),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => Node::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x * y),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => Node::Const(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (&a, &b) {
        _ if is_const(&a, 0.0) => Node::Const(0.0),
        _ if is_const(&b, 1.0) => a,
        _ => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn pow(a: Node, n: u32) -> Node {
    match n {
        0 => Node::Const(1.0),
        1 => a,
        _ => match a {
            Node::Const(c) => Node::Const(c.powi(n as i32)),
            other => Node::Pow(Box::new(other), n),
        },
    }
}

pub(crate) fn derivative(node: &Node, var: usize) -> Node {
    match node {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(i) => Node::Const(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(derivative(a, var)),
        Node::Add(a, b) => add(derivative(a, var), derivative(b, var)),
        Node::Sub(a, b) => sub(derivative(a, var), derivative(b, var)),
        Node::Mul(a, b) => add(
            mul(derivative(a, var), (**b).clone()),
            mul((**a).clone(), derivative(b, var)),
        ),
        Node::Div(a, b) => {
            let da = derivative(a, var);
            let db = derivative(b, var);
            if is_const(&db, 0.0) {
                div(da, (**b).clone())
            } else {
                div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    pow((**b).clone(), 2),
                )
            }
        }
        Node::Pow(a, n) => match n {
            0 => Node::Const(0.0),
            _ => mul(
                mul(Node::Const(*n as f64), pow((**a).clone(), n - 1)),
                derivative(a, var),
            ),
        },
        Node::Call(f, a) => {
            let outer = match f {
                Func::Exp => Node::Call(Func::Exp, a.clone()),
                Func::Sin => Node::Call(Func::Cos, a.clone()),
                Func::Cos => neg(Node::Call(Func::Sin, a.clone())),
            };
            mul(outer, derivative(a, var))
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{Expression, Node};

    #[test]
    fn derivative_of_cubic_at_origin() {
        let e = Expression::parse("x - x^3", &["x"]).unwrap();
        assert_eq!(e.differentiate(0).unwrap().eval(&[0.0]), 1.0);
    }

    #[test]
    fn linear_coefficient_folds_to_constant() {
        let e = Expression::parse("0.8*x + 0.2*y", &["x", "y"]).unwrap();
        let d = e.differentiate(1).unwrap();
        assert_eq!(d.root(), &Node::Const(0.2));
    }

    #[test]
    fn product_with_exponential_matches_finite_difference() {
        let e = Expression::parse("exp(x)*x", &["x"]).unwrap();
        let d = e.differentiate(0).unwrap().eval(&[1.0]);
        let h = 1e-6;
        let fd = (e.eval(&[1.0 + h]) - e.eval(&[1.0 - h])) / (2.0 * h);
        assert!((d - 2.0 * std::f64::consts::E).abs() < 1e-12);
        assert!((d - fd).abs() / d.abs() < 1e-6);
    }

    #[test]
    fn quotient_and_trig_rules() {
        let e = Expression::parse("sin(x)/cos(x)", &["x"]).unwrap();
        let d = e.differentiate(0).unwrap();
        let x: f64 = 0.3;
        assert!((d.eval(&[x]) - 1.0 / x.cos().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_variable() {
        let e = Expression::parse("x", &["x"]).unwrap();
        assert!(e.differentiate(1).is_err());
    }
}
