//! Closed-form manifold coefficients of the quadratic saddle
//!
//!   x ↦ λ1 x + a1 x² + a2 xy + a3 y²
//!   y ↦ λ2 y + b1 x² + b2 xy + b3 y²
//!
//! used to cross-check the series solver on random coefficient draws.

use anyhow::Result;
use orbitdim::config::{System, SystemDef};
use orbitdim::manifolds::{solve_invariance, ManifoldKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const NAMES: [&str; 8] = ["λ1", "λ2", "a1", "a2", "a3", "b1", "b2", "b3"];

#[derive(Debug, Clone, Copy)]
pub struct Coefficients {
    pub l1: f64,
    pub l2: f64,
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl Coefficients {
    /// `y = α2 x² + α3 x³` on the stable manifold.
    pub fn alpha(&self) -> (f64, f64) {
        let (l1, l2) = (self.l1, self.l2);
        let [a1, _, _] = self.a;
        let [b1, b2, _] = self.b;
        let d2 = l1 * l1 - l2;
        let d3 = l1.powi(3) - l2;
        (b1 / d2, b1 * (b2 - 2.0 * a1 * l1) / (d2 * d3))
    }

    /// `x = β2 y² + β3 y³` on the unstable manifold.
    pub fn beta(&self) -> (f64, f64) {
        let (l1, l2) = (self.l1, self.l2);
        let [_, a2, a3] = self.a;
        let [_, _, b3] = self.b;
        let d2 = l2 * l2 - l1;
        let d3 = l2.powi(3) - l1;
        (a3 / d2, a3 * (a2 - 2.0 * b3 * l2) / (d2 * d3))
    }

    fn values(&self) -> [f64; 8] {
        [self.l1, self.l2, self.a[0], self.a[1], self.a[2], self.b[0], self.b[1], self.b[2]]
    }

    /// A non-resonant saddle: `|λ1| in [0.2, 0.9)`, `|λ2| in [1.2, 3)`,
    /// quadratic coefficients in `[-1, 1)`.
    pub fn draw(rng: &mut ChaCha8Rng) -> Self {
        let mut sign = || if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let s1 = sign();
        let s2 = sign();
        let l1 = s1 * rng.gen_range(0.2..0.9);
        let l2 = s2 * rng.gen_range(1.2..3.0);
        let mut c = [0.0; 6];
        for v in c.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        Coefficients {
            l1,
            l2,
            a: [c[0], c[1], c[2]],
            b: [c[3], c[4], c[5]],
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DrawReport {
    pub system: String,
    pub draws: usize,
    pub seed: u64,
    pub order: usize,
    pub max_coefficient_error: f64,
    pub max_residual: f64,
    pub pass: bool,
}

/// Solves stable and unstable series for `draws` random coefficient sets and
/// compares the quadratic and cubic terms with the closed forms.
pub fn check_draws(def: &SystemDef, draws: usize, seed: u64, order: usize) -> Result<DrawReport> {
    if order < 3 {
        return Err(orbitdim::Error::InvalidParameter(
            "closed forms cover orders 2 and 3; use --order 3 or higher".into(),
        )
        .into());
    }
    for name in NAMES {
        if !def.parameters.iter().any(|(n, _)| n == name) {
            return Err(orbitdim::Error::InvalidParameter(format!(
                "--draws needs a system with parameters {}; {} lacks `{name}`",
                NAMES.join(", "),
                def.name
            ))
            .into());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err = 0.0f64;
    let mut max_res = 0.0f64;
    for _ in 0..draws {
        let c = Coefficients::draw(&mut rng);
        let mut d = def.clone();
        let overrides: Vec<(String, f64)> = NAMES
            .iter()
            .zip(c.values())
            .map(|(n, v)| (n.to_string(), v))
            .collect();
        d.set_parameters(&overrides)?;
        let System::Map(map) = d.build()? else {
            return Err(orbitdim::Error::InvalidSystem("--draws needs a map".into()).into());
        };
        let s = solve_invariance(&map, 0, ManifoldKind::Stable, order)?;
        let u = solve_invariance(&map, 1, ManifoldKind::Unstable, order)?;
        let (a2, a3) = c.alpha();
        let (b2, b3) = c.beta();
        for (got, want) in [
            (s.coefficients[0], a2),
            (s.coefficients[1], a3),
            (u.coefficients[0], b2),
            (u.coefficients[1], b3),
        ] {
            max_err = max_err.max((got - want).abs());
        }
        max_res = max_res.max(s.residual).max(u.residual);
    }
    Ok(DrawReport {
        system: def.name.clone(),
        draws,
        seed,
        order,
        max_coefficient_error: max_err,
        max_residual: max_res,
        pass: max_err <= 1e-10 && max_res < 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha2_for_documented_parameters() {
        let c = Coefficients {
            l1: 0.5,
            l2: 2.0,
            a: [0.0; 3],
            b: [1.0, 0.0, 0.0],
        };
        assert!((c.alpha().0 + 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(c.beta(), (0.0, 0.0));
    }

    #[test]
    fn draws_are_non_resonant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let c = Coefficients::draw(&mut rng);
            assert!(c.l1.abs() < 1.0 && c.l2.abs() > 1.0);
        }
    }
}
