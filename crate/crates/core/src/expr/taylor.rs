use std::collections::BTreeMap;

use super::Expression;
use crate::error::{Error, Result};

/// Highest total degree supported by [`Expression::taylor_coefficients`].
pub const MAX_TAYLOR_ORDER: usize = 5;

/// Coefficients of a multivariate Taylor polynomial, keyed by multi-index.
///
/// Every multi-index with total degree `<= order` has an entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorTable {
    arity: usize,
    order: usize,
    coeffs: BTreeMap<Vec<u32>, f64>,
}

impl TaylorTable {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of the monomial with exponents `alpha`; zero beyond the order.
    pub fn get(&self, alpha: &[u32]) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    /// Iterates `(multi-index, coefficient)` in graded-lexicographic order of storage.
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.coeffs.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// Entries with `|coefficient| > tol`.
    pub fn nonzero(&self, tol: f64) -> impl Iterator<Item = (&[u32], f64)> {
        self.iter().filter(move |(_, c)| c.abs() > tol)
    }

    /// For a univariate table, the coefficient list `[c_0, c_1, ..., c_order]`.
    pub fn univariate(&self) -> Vec<f64> {
        (0..=self.order as u32).map(|j| self.get(&[j])).collect()
    }
}

/// All multi-indices over `arity` variables with total degree `<= order`,
/// in increasing degree.
pub fn multi_indices(arity: usize, order: usize) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, arity: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == arity {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            rec(prefix, arity, remaining - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for degree in 0..=order as u32 {
        rec(&mut Vec::with_capacity(arity), arity, degree, &mut out);
    }
    out
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub(crate) fn taylor_coefficients(
    e: &Expression,
    center: &[f64],
    order: usize,
) -> Result<TaylorTable> {
    if order > MAX_TAYLOR_ORDER {
        return Err(Error::OrderTooLarge(order));
    }
    let arity = e.arity();
    if center.len() != arity {
        return Err(Error::ArityMismatch {
            expected: arity,
            got: center.len(),
        });
    }
    // Each derivative is obtained from its parent multi-index by one more
    // differentiation along the first variable with a positive exponent.
    let mut derivs: BTreeMap<Vec<u32>, Expression> = BTreeMap::new();
    let mut coeffs = BTreeMap::new();
    for alpha in multi_indices(arity, order) {
        let d = match alpha.iter().position(|&k| k > 0) {
            None => e.clone(),
            Some(i) => {
                let mut parent = alpha.clone();
                parent[i] -= 1;
                derivs[&parent].differentiate(i)?
            }
        };
        let value = d.eval(center);
        if !value.is_finite() {
            return Err(Error::NonFiniteDerivative(alpha));
        }
        let denom: f64 = alpha.iter().map(|&k| factorial(k)).product();
        coeffs.insert(alpha.clone(), value / denom);
        derivs.insert(alpha, d);
    }
    Ok(TaylorTable {
        arity,
        order,
        coeffs,
    })
}
