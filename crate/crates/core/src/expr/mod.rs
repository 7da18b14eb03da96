//! Scalar expressions over a declared list of real variables.
//!
//! Every system in the crate (map components, vector fields, manifold graphs,
//! restricted maps) is an [`Expression`]. The grammar is deliberately small:
//! arithmetic, non-negative integer powers and `exp`, `sin`, `cos`. The class is
//! closed under differentiation, so Jacobians and Taylor coefficients are exact.

mod diff;
mod parse;
mod taylor;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use taylor::{multi_indices, TaylorTable, MAX_TAYLOR_ORDER};

/// Elementary functions allowed in expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
        }
    }
}

/// Expression tree node. Variables are indices into the owning expression's
/// variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, n) => a.eval(x).powi(*n as i32),
            Node::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(p), Some(q)) => Some(p.max(q)),
                    (p, q) => p.or(q),
                }
            }
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, names: &[String]) -> fmt::Result {
        match self {
            Node::Const(c) if c.is_sign_negative() => write!(f, "(-{:?})", c.abs()),
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(i) => f.write_str(&names[*i]),
            Node::Neg(a) => {
                f.write_str("(-")?;
                a.write(f, names)?;
                f.write_str(")")
            }
            Node::Add(a, b) => binary(f, names, a, "+", b),
            Node::Sub(a, b) => binary(f, names, a, "-", b),
            Node::Mul(a, b) => binary(f, names, a, "*", b),
            Node::Div(a, b) => binary(f, names, a, "/", b),
            Node::Pow(a, n) => {
                if matches!(**a, Node::Var(_) | Node::Call(..))
                    || matches!(**a, Node::Const(c) if !c.is_sign_negative())
                {
                    a.write(f, names)?;
                } else {
                    f.write_str("(")?;
                    a.write(f, names)?;
                    f.write_str(")")?;
                }
                write!(f, "^{n}")
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, names)?;
                f.write_str(")")
            }
        }
    }
}

fn binary(
    f: &mut fmt::Formatter<'_>,
    names: &[String],
    a: &Node,
    op: &str,
    b: &Node,
) -> fmt::Result {
    f.write_str("(")?;
    a.write(f, names)?;
    write!(f, " {op} ")?;
    b.write(f, names)?;
    f.write_str(")")
}

/// An immutable scalar expression together with its declared variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    vars: Arc<[String]>,
}

impl Expression {
    /// Wraps a tree, checking that every variable index is declared.
    pub fn new(root: Node, vars: Arc<[String]>) -> Result<Self> {
        if let Some(i) = root.max_var() {
            if i >= vars.len() {
                return Err(Error::VariableOutOfRange {
                    index: i,
                    arity: vars.len(),
                });
            }
        }
        Ok(Expression { root, vars })
    }

    /// Parses `text` over the ordered variable list.
    pub fn parse(text: &str, vars: &[&str]) -> Result<Self> {
        Self::parse_with_params(text, vars, &[])
    }

    /// Parses `text`; identifiers found in `params` are replaced by their
    /// numeric value at parse time.
    pub fn parse_with_params(text: &str, vars: &[&str], params: &[(&str, f64)]) -> Result<Self> {
        let vars = validate_vars(vars)?;
        let root = parse::parse(text, &vars, params)?;
        Ok(Expression { root, vars })
    }

    pub fn constant(value: f64, vars: Arc<[String]>) -> Self {
        Expression {
            root: Node::Const(value),
            vars,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn variables(&self) -> &Arc<[String]> {
        &self.vars
    }

    /// Evaluates at `point`, checking its length. Non-finite results are
    /// returned as-is; callers that need finite values must check.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                got: point.len(),
            });
        }
        Ok(self.root.eval(point))
    }

    /// Evaluates without the arity check.
    ///
    /// Panics if `point` is shorter than the highest variable index used.
    #[inline]
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.root.eval(point)
    }

    /// Exact symbolic partial derivative with respect to variable `var`.
    pub fn differentiate(&self, var: usize) -> Result<Expression> {
        if var >= self.arity() {
            return Err(Error::VariableOutOfRange {
                index: var,
                arity: self.arity(),
            });
        }
        Ok(Expression {
            root: diff::derivative(&self.root, var),
            vars: self.vars.clone(),
        })
    }

    /// Taylor polynomial coefficients up to total degree `order` at `center`.
    pub fn taylor_coefficients(&self, center: &[f64], order: usize) -> Result<TaylorTable> {
        taylor::taylor_coefficients(self, center, order)
    }

    /// Builds `Σ coeffs[j] · x_var^j` (constant term first), skipping zero terms.
    pub fn polynomial(coeffs: &[f64], var: usize, vars: Arc<[String]>) -> Result<Self> {
        let mut root: Option<Node> = None;
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let monomial = match j {
                0 => Node::Const(c),
                1 => diff::mul(Node::Const(c), Node::Var(var)),
                _ => diff::mul(Node::Const(c), Node::Pow(Box::new(Node::Var(var)), j as u32)),
            };
            root = Some(match root {
                None => monomial,
                Some(acc) => Node::Add(Box::new(acc), Box::new(monomial)),
            });
        }
        Expression::new(root.unwrap_or(Node::Const(0.0)), vars)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f, &self.vars)
    }
}

/// Validates and interns a variable list.
pub fn validate_vars(vars: &[&str]) -> Result<Arc<[String]>> {
    if vars.is_empty() {
        return Err(Error::InvalidVariables("variable list is empty".into()));
    }
    for (i, v) in vars.iter().enumerate() {
        if !parse::is_identifier(v) {
            return Err(Error::InvalidVariables(format!("`{v}` is not an identifier")));
        }
        if Func::from_name(v).is_some() {
            return Err(Error::InvalidVariables(format!("`{v}` is a reserved function name")));
        }
        if vars[..i].contains(v) {
            return Err(Error::InvalidVariables(format!("duplicate variable `{v}`")));
        }
    }
    Ok(vars.iter().map(|s| s.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_linear_combination() {
        let e = Expression::parse("0.8*x + 0.2*y", &["x", "y"]).unwrap();
        assert_eq!(e.evaluate(&[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn evaluates_zero_case_and_identity() {
        let e = Expression::parse("x - x^3", &["x"]).unwrap();
        assert_eq!(e.evaluate(&[0.0]).unwrap(), 0.0);
        let e = Expression::parse("exp(x)", &["x"]).unwrap();
        assert_eq!(e.evaluate(&[0.0]).unwrap(), 1.0);
        let e = Expression::parse("1.2*x", &["x"]).unwrap();
        assert_eq!(e.evaluate(&[1.0]).unwrap(), 1.2);
    }

    #[test]
    fn division_by_zero_is_non_finite() {
        let e = Expression::parse("x/y", &["x", "y"]).unwrap();
        assert!(!e.evaluate(&[1.0, 0.0]).unwrap().is_finite());
    }

    #[test]
    fn arity_mismatch() {
        let e = Expression::parse("x", &["x", "y"]).unwrap();
        assert_eq!(
            e.evaluate(&[1.0]),
            Err(Error::ArityMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn rejects_bad_variable_lists() {
        assert!(Expression::parse("x", &[]).is_err());
        assert!(Expression::parse("x", &["x", "x"]).is_err());
        assert!(Expression::parse("x", &["exp"]).is_err());
        assert!(Expression::parse("x", &["1x"]).is_err());
    }

    #[test]
    fn new_checks_variable_range() {
        let vars: Arc<[String]> = vec!["x".to_string()].into();
        assert!(Expression::new(Node::Var(1), vars.clone()).is_err());
        assert!(Expression::new(Node::Var(0), vars).is_ok());
    }

    #[test]
    fn print_round_trips() {
        let vars = ["x", "y"];
        for text in [
            "-2.5*x + y^3 - exp(-x)/(1 + y^2)",
            "sin(x)*cos(y) - -x",
            "1e-7*x - 3.25e10",
            "(x - y)^2^2",
        ] {
            let e = Expression::parse(text, &vars).unwrap();
            let printed = e.to_string();
            let back = Expression::parse(&printed, &vars).unwrap();
            for p in [[0.3, -0.7], [1.5, 2.0], [-0.1, 0.0]] {
                assert_eq!(e.eval(&p).to_bits(), back.eval(&p).to_bits(), "{printed}");
            }
        }
    }

    #[test]
    fn polynomial_builder() {
        let vars: Arc<[String]> = vec!["x".to_string()].into();
        let p = Expression::polynomial(&[0.0, 1.0, 0.0, -1.0], 0, vars).unwrap();
        assert_eq!(p.to_string(), "(x + ((-1.0) * x^3))");
        assert_eq!(p.eval(&[2.0]), -6.0);
    }
}
