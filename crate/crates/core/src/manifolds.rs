//! Invariant manifolds of planar maps as polynomial graphs.
//!
//! In eigenbasis coordinates `u` (graph axis) and `v` (normal axis) around the
//! fixed point, a one-dimensional invariant manifold is written as
//! `v = h(u) = c_2 u^2 + ... + c_K u^K`. Invariance
//! `h(F_u(u, h(u))) = F_v(u, h(u))` is solved order by order: at order `m` the
//! unknown `c_m` enters with the factor `λ_u^m - λ_v` and everything else is
//! already known.

use serde::Serialize;

use crate::dynsys::{FlowSystem, MapSystem, Orbit};
use crate::error::{Error, Result};
use crate::expr::{Expression, TaylorTable, MAX_TAYLOR_ORDER};
use crate::poly::Truncated;

/// Default series order.
pub const DEFAULT_ORDER: usize = 3;
/// Small-denominator threshold for `λ_u^m - λ_v`.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Off-diagonal Jacobian entries above this are rejected.
pub const DIAGONAL_TOL: f64 = 1e-9;
/// Radius of the invariance residual check.
pub const RESIDUAL_RADIUS: f64 = 0.01;
const RESIDUAL_SAMPLES: usize = 20;
const UNIT_TOL: f64 = 1e-9;
const COEFF_TOL: f64 = 1e-10;

/// Acceptable invariance residual for a series of order `order`: the residual
/// is `O(r^{order+1})`, so the bound is `1e4 r^{order+1}` at `r = 0.01`
/// (`1e-8` at order 5).
pub fn residual_tolerance(order: usize) -> f64 {
    1e4 * RESIDUAL_RADIUS.powi(order as i32 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Stable,
    Unstable,
    Center,
}

impl std::str::FromStr for ManifoldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stable" => Ok(ManifoldKind::Stable),
            "unstable" => Ok(ManifoldKind::Unstable),
            "center" => Ok(ManifoldKind::Center),
            other => Err(Error::InvalidParameter(format!("unknown manifold kind `{other}`"))),
        }
    }
}

/// Graph `v = h(u)` of a one-dimensional invariant manifold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldExpansion {
    pub kind: ManifoldKind,
    pub base_point: Vec<f64>,
    /// Index of the independent variable `u`.
    pub axis: usize,
    /// Index of the dependent variable `v`.
    pub normal: usize,
    /// `[c_2, ..., c_K]`.
    pub coefficients: Vec<f64>,
    pub lambda_axis: f64,
    pub lambda_normal: f64,
    /// Max invariance residual at sample points with `|u| <= 0.01`.
    pub residual: f64,
}

impl ManifoldExpansion {
    pub fn order(&self) -> usize {
        self.coefficients.len() + 1
    }

    /// `h(u)`, `u` measured from the base point.
    pub fn graph(&self, u: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * u + c)
            * u
            * u
    }

    fn truncated(&self) -> Truncated {
        let mut coeffs = vec![0.0, 0.0];
        coeffs.extend_from_slice(&self.coefficients);
        Truncated::from_coeffs(&coeffs, self.order())
    }

    /// Ambient point on the manifold above local coordinate `u`.
    pub fn lift_point(&self, u: f64) -> Vec<f64> {
        let mut p = self.base_point.clone();
        p[self.axis] += u;
        p[self.normal] += self.graph(u);
        p
    }
}

/// The system restricted to a manifold, `G(u) = F_u(u, h(u))` truncated at
/// the expansion order, as a 1-D map with fixed point 0.
#[derive(Debug, Clone)]
pub struct RestrictedMap {
    pub map: MapSystem,
    /// `[g_0, g_1, ..., g_K]`, with `g_0 = 0` and `g_1 = λ_u`.
    pub coefficients: Vec<f64>,
    pub expansion: ManifoldExpansion,
}

/// Order of first nonlinearity of a 1-D map with multiplier ±1, and the
/// predicted orbit dimension `1 - 1/k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nondegeneracy {
    pub k: usize,
    pub predicted_dimension: f64,
    pub multiplier: f64,
    /// Set when the multiplier is -1 and `k` was read from `G∘G`.
    pub second_iterate: bool,
}

/// Local Taylor polynomial of each component around the fixed point, with
/// the constant term removed.
fn local_tables(sys: &MapSystem, order: usize) -> Result<Vec<TaylorTable>> {
    sys.components()
        .iter()
        .map(|c| c.taylor_coefficients(sys.fixed_point(), order))
        .collect()
}

/// `Σ_α t_α u^{α_axis} h(u)^{α_normal}` without the constant term.
fn substitute(
    table: &TaylorTable,
    axis: usize,
    h: &Truncated,
    h_powers: &[Truncated],
) -> Truncated {
    let degree = h.degree();
    let mut out = Truncated::zero(degree);
    for (alpha, c) in table.iter() {
        if c == 0.0 || alpha.iter().all(|&k| k == 0) {
            continue;
        }
        let (pu, pv) = (alpha[axis] as usize, alpha[1 - axis] as usize);
        if pu > degree {
            continue;
        }
        let mut term = Truncated::zero(degree);
        for (j, &hc) in h_powers[pv].c.iter().enumerate() {
            if j + pu <= degree {
                term.c[j + pu] = hc;
            }
        }
        out.add_scaled(&term, c);
    }
    out
}

/// Solves the invariance equation for a manifold graphed over `axis` of a
/// planar map given in eigenbasis coordinates.
pub fn solve_invariance(
    sys: &MapSystem,
    axis: usize,
    kind: ManifoldKind,
    order: usize,
) -> Result<ManifoldExpansion> {
    if sys.arity() != 2 {
        return Err(Error::InvalidSystem(
            "manifold series are solved for planar maps only".into(),
        ));
    }
    if axis > 1 {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
    }
    if !(2..=MAX_TAYLOR_ORDER).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "series order {order} outside 2..={MAX_TAYLOR_ORDER}"
        )));
    }
    let normal = 1 - axis;
    let tables = local_tables(sys, order)?;
    let unit = |i: usize| {
        let mut a = vec![0u32; 2];
        a[i] = 1;
        a
    };
    let off_a = tables[axis].get(&unit(normal));
    let off_b = tables[normal].get(&unit(axis));
    if off_a.abs() > DIAGONAL_TOL || off_b.abs() > DIAGONAL_TOL {
        return Err(Error::NotDiagonal(format!(
            "off-diagonal entries {off_a:e}, {off_b:e}"
        )));
    }
    let lu = tables[axis].get(&unit(axis));
    let lv = tables[normal].get(&unit(normal));
    if (lu - lv).abs() < RESONANCE_TOL {
        return Err(Error::Resonance {
            order: 1,
            denominator: lu - lv,
        });
    }
    let kind_ok = match kind {
        ManifoldKind::Stable => lu.abs() < 1.0,
        ManifoldKind::Unstable => lu.abs() > 1.0,
        ManifoldKind::Center => (lu.abs() - 1.0).abs() <= UNIT_TOL && (lv.abs() - 1.0).abs() > UNIT_TOL,
    };
    if !kind_ok {
        return Err(Error::InvalidParameter(format!(
            "multipliers (axis {lu}, normal {lv}) do not admit a {kind:?} manifold over axis {axis}"
        )));
    }

    let mut h = Truncated::zero(order);
    for m in 2..=order {
        let hp = h.powers(order);
        let pu = substitute(&tables[axis], axis, &h, &hp);
        let pv = substitute(&tables[normal], axis, &h, &hp);
        let lhs = h.compose(&pu);
        let rem = lhs.c[m] - pv.c[m];
        let denom = lu.powi(m as i32) - lv;
        if denom.abs() < RESONANCE_TOL {
            return Err(Error::Resonance {
                order: m,
                denominator: denom,
            });
        }
        h.c[m] = -rem / denom;
    }

    let mut expansion = ManifoldExpansion {
        kind,
        base_point: sys.fixed_point().to_vec(),
        axis,
        normal,
        coefficients: h.c[2..].to_vec(),
        lambda_axis: lu,
        lambda_normal: lv,
        residual: 0.0,
    };
    expansion.residual = invariance_residual(sys, &expansion);
    Ok(expansion)
}

/// `max |h(F_u(p)) - F_v(p)|` over points `p` on the graph with `|u| <= 0.01`.
pub fn invariance_residual(sys: &MapSystem, e: &ManifoldExpansion) -> f64 {
    let x0 = &e.base_point;
    (0..RESIDUAL_SAMPLES)
        .map(|i| {
            let u = RESIDUAL_RADIUS * (2.0 * i as f64 / (RESIDUAL_SAMPLES - 1) as f64 - 1.0);
            let image = sys.apply(&e.lift_point(u));
            let fu = image[e.axis] - x0[e.axis];
            let fv = image[e.normal] - x0[e.normal];
            (e.graph(fu) - fv).abs()
        })
        .fold(0.0, f64::max)
}

/// Restricts the map to the manifold: `G(u) = F_u(u, h(u))` truncated at the
/// expansion order.
pub fn restrict_to_manifold(sys: &MapSystem, expansion: &ManifoldExpansion) -> Result<RestrictedMap> {
    let order = expansion.order();
    if !(expansion.residual <= residual_tolerance(order)) {
        return Err(Error::ResidualTooLarge(expansion.residual));
    }
    let tables = local_tables(sys, order)?;
    let h = expansion.truncated();
    let hp = h.powers(order);
    let g = substitute(&tables[expansion.axis], expansion.axis, &h, &hp);
    if (g.c[1] - expansion.lambda_axis).abs() > 1e-10 {
        return Err(Error::Inconsistent(format!(
            "restricted multiplier {} differs from λ = {}",
            g.c[1], expansion.lambda_axis
        )));
    }
    let var = sys.components()[0].variables()[expansion.axis].clone();
    let vars: std::sync::Arc<[String]> = vec![var].into();
    let expr = Expression::polynomial(&g.c, 0, vars)?;
    let map = MapSystem::new(format!("{}|{:?}", sys.name(), expansion.kind), vec![expr], None)?;
    Ok(RestrictedMap {
        map,
        coefficients: g.c,
        expansion: expansion.clone(),
    })
}

fn first_nonlinear(coeffs: &[f64], order: usize) -> Result<usize> {
    coeffs
        .iter()
        .enumerate()
        .skip(2)
        .find(|(_, c)| c.abs() > COEFF_TOL)
        .map(|(j, _)| j)
        .ok_or(Error::Degenerate(order))
}

fn classify_coefficients(coeffs: &[f64], order: usize) -> Result<Nondegeneracy> {
    let g1 = coeffs.get(1).copied().unwrap_or(0.0);
    let (k, second_iterate) = if (g1 - 1.0).abs() <= UNIT_TOL {
        (first_nonlinear(coeffs, order)?, false)
    } else if (g1 + 1.0).abs() <= UNIT_TOL {
        let g = Truncated::from_coeffs(coeffs, order);
        let gg = g.compose(&g);
        (first_nonlinear(&gg.c, order)?, true)
    } else {
        return Err(Error::HyperbolicRestriction(g1.abs()));
    };
    Ok(Nondegeneracy {
        k,
        predicted_dimension: 1.0 - 1.0 / k as f64,
        multiplier: g1,
        second_iterate,
    })
}

/// Nondegeneracy order of a 1-D map at its fixed point, from its Taylor
/// coefficients up to order 5. A multiplier of -1 is handled through `G∘G`.
pub fn nondegeneracy_order(g: &MapSystem) -> Result<Nondegeneracy> {
    if g.arity() != 1 {
        return Err(Error::InvalidSystem(
            "nondegeneracy order needs a one-dimensional map".into(),
        ));
    }
    let table = g.components()[0].taylor_coefficients(g.fixed_point(), MAX_TAYLOR_ORDER)?;
    let mut coeffs = table.univariate();
    coeffs[0] -= g.fixed_point()[0];
    classify_coefficients(&coeffs, MAX_TAYLOR_ORDER)
}

/// Order `m` of a one-dimensional flow `ẋ = a_m x^m + ...` with `f'(x0) = 0`,
/// and the predicted unit-time orbit dimension `1 - 1/m`.
pub fn flow_order(flow: &FlowSystem) -> Result<Nondegeneracy> {
    if flow.arity() != 1 {
        return Err(Error::InvalidSystem("flow order needs a one-dimensional flow".into()));
    }
    let coeffs = flow.components()[0]
        .taylor_coefficients(flow.singularity(), MAX_TAYLOR_ORDER)?
        .univariate();
    if coeffs[1].abs() > UNIT_TOL {
        return Err(Error::HyperbolicRestriction(coeffs[1].exp()));
    }
    let m = first_nonlinear(&coeffs, MAX_TAYLOR_ORDER)?;
    Ok(Nondegeneracy {
        k: m,
        predicted_dimension: 1.0 - 1.0 / m as f64,
        multiplier: 1.0,
        second_iterate: false,
    })
}

impl RestrictedMap {
    /// Nondegeneracy order read from the truncated restriction.
    pub fn nondegeneracy(&self) -> Result<Nondegeneracy> {
        classify_coefficients(&self.coefficients, self.expansion.order())
    }
}

/// Maps a 1-D orbit in the manifold coordinate `u` onto the graph `(u, h(u))`
/// in the ambient space. The orbit is assumed to lie where the series is
/// accurate.
pub fn lift_orbit(orbit: &Orbit, expansion: &ManifoldExpansion) -> Result<Orbit> {
    if orbit.dim() != 1 {
        return Err(Error::InvalidParameter("only 1-D orbits can be lifted".into()));
    }
    let dim = expansion.base_point.len();
    let u0 = orbit.fixed_point()[0];
    let mut data = Vec::with_capacity(orbit.len() * dim);
    for p in orbit.points() {
        data.extend(expansion.lift_point(p[0] - u0));
    }
    Ok(Orbit::with_parts(
        dim,
        data,
        expansion.base_point.clone(),
        orbit.direction(),
        orbit.termination(),
        format!("{} (lifted)", orbit.source()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{generate_inverse_orbit, generate_orbit, OrbitSettings};

    fn saddle(p: &[(&str, f64)]) -> MapSystem {
        let comps = [
            "λ1*x + a1*x^2 + a2*x*y + a3*y^2",
            "λ2*y + b1*x^2 + b2*x*y + b3*y^2",
        ];
        let mut params: Vec<(&str, f64)> = ["a1", "a2", "a3", "b1", "b2", "b3"]
            .iter()
            .map(|n| (*n, 0.0))
            .collect();
        for (name, value) in p {
            if let Some(slot) = params.iter_mut().find(|(n, _)| n == name) {
                slot.1 = *value;
            } else {
                params.push((name, *value));
            }
        }
        let exprs = comps
            .iter()
            .map(|c| Expression::parse_with_params(c, &["x", "y"], &params).unwrap())
            .collect();
        MapSystem::new("saddle", exprs, None).unwrap()
    }

    #[test]
    fn quadratic_coefficient_of_stable_manifold() {
        let sys = saddle(&[("λ1", 0.5), ("λ2", 2.0), ("b1", 1.0)]);
        let e = solve_invariance(&sys, 0, ManifoldKind::Stable, 3).unwrap();
        assert!((e.coefficients[0] + 4.0 / 7.0).abs() < 1e-15);
        assert!(e.residual < 1e-8, "{}", e.residual);
    }

    #[test]
    fn linear_system_has_flat_manifolds() {
        let sys = saddle(&[("λ1", 0.5), ("λ2", 2.0)]);
        let s = solve_invariance(&sys, 0, ManifoldKind::Stable, 5).unwrap();
        assert!(s.coefficients.iter().all(|c| *c == 0.0));
        let r = restrict_to_manifold(&sys, &s).unwrap();
        assert_eq!(r.coefficients, vec![0.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let u = solve_invariance(&sys, 1, ManifoldKind::Unstable, 3).unwrap();
        assert!(u.coefficients.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn restriction_matches_displayed_cubic_term() {
        let (l1, l2, a1, a2, b1) = (0.6, 1.7, 0.3, -0.8, 1.1);
        let sys = saddle(&[("λ1", l1), ("λ2", l2), ("a1", a1), ("a2", a2), ("b1", b1), ("a3", 0.4)]);
        let e = solve_invariance(&sys, 0, ManifoldKind::Stable, 3).unwrap();
        let r = restrict_to_manifold(&sys, &e).unwrap();
        let alpha2 = b1 / (l1 * l1 - l2);
        assert!((r.coefficients[1] - l1).abs() < 1e-15);
        assert!((r.coefficients[2] - a1).abs() < 1e-15);
        assert!((r.coefficients[3] - a2 * alpha2).abs() < 1e-14);
    }

    #[test]
    fn center_manifold_of_planar_example() {
        let sys = MapSystem::from_strs("c2d", &["x", "y"], &["x - x^3 + x*y", "0.5*y + x^2"]).unwrap();
        let e = solve_invariance(&sys, 0, ManifoldKind::Center, 3).unwrap();
        assert!((e.coefficients[0] - 2.0).abs() < 1e-14);
        assert!(e.coefficients[1].abs() < 1e-14);
        let r = restrict_to_manifold(&sys, &e).unwrap();
        assert_eq!(r.coefficients.len(), 4);
        assert!((r.coefficients[1] - 1.0).abs() < 1e-15);
        assert!(r.coefficients[2].abs() < 1e-15);
        assert!((r.coefficients[3] - 1.0).abs() < 1e-14);
        let nd = r.nondegeneracy().unwrap();
        assert_eq!(nd.k, 3);
        assert!((nd.predicted_dimension - 2.0 / 3.0).abs() < 1e-15);
        // Fourth-order term: c4 = -8.
        let e5 = solve_invariance(&sys, 0, ManifoldKind::Center, 5).unwrap();
        assert!((e5.coefficients[2] + 8.0).abs() < 1e-12);
        assert!(e5.residual < 1e-8);
    }

    #[test]
    fn tangency() {
        let sys = MapSystem::from_strs("c2d", &["x", "y"], &["x - x^3 + x*y", "0.5*y + x^2"]).unwrap();
        let e = solve_invariance(&sys, 0, ManifoldKind::Center, 3).unwrap();
        let u = 1e-4;
        assert!((e.graph(u) / u).abs() < 1e-3);
    }

    #[test]
    fn resonance_is_refused() {
        // λ2 = λ1^2 makes the quadratic denominator vanish.
        let sys = saddle(&[("λ1", 0.5), ("λ2", 0.25), ("b1", 1.0)]);
        assert!(matches!(
            solve_invariance(&sys, 0, ManifoldKind::Stable, 3),
            Err(Error::Resonance { order: 2, .. })
        ));
    }

    #[test]
    fn non_diagonal_jacobian_is_refused() {
        let sys = MapSystem::from_strs("rot", &["x", "y"], &["0.8*x + 0.2*y", "-0.2*x + 0.8*y"]).unwrap();
        assert!(matches!(
            solve_invariance(&sys, 0, ManifoldKind::Stable, 3),
            Err(Error::NotDiagonal(_))
        ));
    }

    #[test]
    fn kind_must_match_multiplier() {
        let sys = saddle(&[("λ1", 0.5), ("λ2", 2.0)]);
        assert!(solve_invariance(&sys, 0, ManifoldKind::Unstable, 3).is_err());
        assert!(solve_invariance(&sys, 1, ManifoldKind::Stable, 3).is_err());
        assert!(solve_invariance(&sys, 0, ManifoldKind::Stable, 6).is_err());
    }

    #[test]
    fn nondegeneracy_of_normal_forms() {
        for (k, text) in [(2, "x - x^2"), (3, "x - x^3"), (4, "x - x^4"), (5, "x - x^5")] {
            let g = MapSystem::from_strs("g", &["x"], &[text]).unwrap();
            let nd = nondegeneracy_order(&g).unwrap();
            assert_eq!(nd.k, k);
            assert!((nd.predicted_dimension - (1.0 - 1.0 / k as f64)).abs() < 1e-15);
            assert!(!nd.second_iterate);
        }
    }

    #[test]
    fn flip_multiplier_uses_second_iterate() {
        let g = MapSystem::from_strs("flip", &["x"], &["-x + x^3"]).unwrap();
        let nd = nondegeneracy_order(&g).unwrap();
        assert_eq!(nd.k, 3);
        assert!(nd.second_iterate);
        // The quadratic term always cancels in G∘G.
        let g = MapSystem::from_strs("flip2", &["x"], &["-x + x^2"]).unwrap();
        assert_eq!(nondegeneracy_order(&g).unwrap().k, 3);
    }

    #[test]
    fn flow_orders() {
        for (m, text) in [(2, "-x^2"), (3, "-x^3 + x^4")] {
            let f = FlowSystem::from_strs("f", &["x"], &[text]).unwrap();
            assert_eq!(flow_order(&f).unwrap().k, m);
        }
        let f = FlowSystem::from_strs("lin", &["x"], &["-x"]).unwrap();
        assert!(matches!(flow_order(&f), Err(Error::HyperbolicRestriction(_))));
    }

    #[test]
    fn nondegeneracy_errors() {
        let g = MapSystem::from_strs("hyp", &["x"], &["0.5*x + x^2"]).unwrap();
        assert!(matches!(nondegeneracy_order(&g), Err(Error::HyperbolicRestriction(_))));
        let g = MapSystem::from_strs("id", &["x"], &["x + 0*x^2"]).unwrap();
        assert_eq!(nondegeneracy_order(&g), Err(Error::Degenerate(5)));
    }

    #[test]
    fn lift_with_flat_graph_is_inclusion() {
        let sys = saddle(&[("λ1", 0.5), ("λ2", 2.0)]);
        let e = solve_invariance(&sys, 0, ManifoldKind::Stable, 3).unwrap();
        let g = MapSystem::from_strs("g", &["x"], &["0.5*x"]).unwrap();
        let o = generate_orbit(&g, &[0.4], &OrbitSettings::with_max_n(10)).unwrap();
        let lifted = lift_orbit(&o, &e).unwrap();
        assert_eq!(lifted.dim(), 2);
        for (p, q) in lifted.points().zip(o.points()) {
            assert_eq!(p, &[q[0], 0.0]);
        }
        let single = Orbit::from_scalars(&[0.1], 0.0).unwrap();
        assert_eq!(lift_orbit(&single, &e).unwrap().len(), 1);
    }

    #[test]
    fn lifted_center_orbit_lies_on_graph() {
        let sys = MapSystem::from_strs("c2d", &["x", "y"], &["x - x^3 + x*y", "0.5*y + x^2"]).unwrap();
        let e = solve_invariance(&sys, 0, ManifoldKind::Center, 3).unwrap();
        let r = restrict_to_manifold(&sys, &e).unwrap();
        let o = generate_inverse_orbit(&r.map, &[0.1], &OrbitSettings::with_max_n(100)).unwrap();
        let lifted = lift_orbit(&o, &e).unwrap();
        for p in lifted.points() {
            assert!((p[1] - 2.0 * p[0] * p[0]).abs() < 1e-15);
        }
    }
}
