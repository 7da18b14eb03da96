//! Univariate polynomials truncated at a fixed degree.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Truncated {
    /// `c[j]` is the coefficient of `x^j`, `j = 0..=degree`.
    pub c: Vec<f64>,
}

impl Truncated {
    pub fn zero(degree: usize) -> Self {
        Truncated {
            c: vec![0.0; degree + 1],
        }
    }

    pub fn from_coeffs(coeffs: &[f64], degree: usize) -> Self {
        let mut p = Self::zero(degree);
        for (dst, src) in p.c.iter_mut().zip(coeffs) {
            *dst = *src;
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn one(degree: usize) -> Self {
        let mut p = Self::zero(degree);
        p.c[0] = 1.0;
        p
    }

    pub fn add_scaled(&mut self, other: &Truncated, s: f64) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += s * b;
        }
    }

    pub fn mul(&self, other: &Truncated) -> Truncated {
        let d = self.degree();
        let mut out = Self::zero(d);
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.c.iter().enumerate().take(d + 1 - i) {
                out.c[i + j] += a * b;
            }
        }
        out
    }

    /// Powers `p^0, ..., p^k`.
    pub fn powers(&self, k: usize) -> Vec<Truncated> {
        let mut out = vec![Self::one(self.degree())];
        for i in 1..=k {
            let next = out[i - 1].mul(self);
            out.push(next);
        }
        out
    }

    /// `self(inner(x))`, truncated.
    pub fn compose(&self, inner: &Truncated) -> Truncated {
        let pw = inner.powers(self.degree());
        let mut out = Self::zero(self.degree());
        for (j, &c) in self.c.iter().enumerate() {
            if c != 0.0 {
                out.add_scaled(&pw[j], c);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_truncates() {
        // (x + x^2) ∘ (x + x^2) = x + 2x^2 + 2x^3 + x^4
        let p = Truncated::from_coeffs(&[0.0, 1.0, 1.0], 3);
        let q = p.compose(&p);
        assert_eq!(q.c, vec![0.0, 1.0, 2.0, 2.0]);
    }
}
