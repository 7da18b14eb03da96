//! Discrete maps, vector fields and their orbits.
//!
//! Orbits are generated with explicit termination semantics: an orbit stops
//! when it comes within `delta_conv` of the fixed point, leaves the ball of
//! radius `r_div`, lands exactly on the fixed point, or reaches `max_n` points.
//! Flow orbits are orbits of the unit-time map, integrated with fixed-step RK4.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;

/// Largest supported state dimension.
pub const MAX_ARITY: usize = 16;
/// Tolerance on `F(x0) = x0` (maps) or `F(x0) = 0` (flows).
pub const FIXED_POINT_TOL: f64 = 1e-9;
/// RK4 steps per unit of time.
pub const DEFAULT_RK4_STEPS: usize = 64;

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX_STEPS: usize = 50;
const SINGULAR_DET: f64 = 1e-12;

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_components(components: &[Expression]) -> Result<usize> {
    let n = components.len();
    if n == 0 || n > MAX_ARITY {
        return Err(Error::InvalidSystem(format!(
            "dimension {n} outside 1..={MAX_ARITY}"
        )));
    }
    for (i, c) in components.iter().enumerate() {
        if c.arity() != n {
            return Err(Error::InvalidSystem(format!(
                "component {i} has arity {} but the system has dimension {n}",
                c.arity()
            )));
        }
    }
    Ok(n)
}

fn jacobian_exprs(components: &[Expression]) -> Result<Vec<Vec<Expression>>> {
    components
        .iter()
        .map(|c| (0..c.arity()).map(|j| c.differentiate(j)).collect())
        .collect()
}

fn eval_matrix(exprs: &[Vec<Expression>], x: &[f64]) -> DMatrix<f64> {
    let n = exprs.len();
    DMatrix::from_fn(n, n, |i, j| exprs[i][j].eval(x))
}

fn parse_components(vars: &[&str], components: &[&str]) -> Result<Vec<Expression>> {
    components
        .iter()
        .map(|c| Expression::parse(c, vars))
        .collect()
}

/// A discrete dynamical system `x_{n+1} = F(x_n)` with a declared fixed point.
#[derive(Debug, Clone)]
pub struct MapSystem {
    name: String,
    components: Vec<Expression>,
    jacobian: Vec<Vec<Expression>>,
    fixed_point: Vec<f64>,
}

impl MapSystem {
    /// Builds the system and validates `F(x0) = x0` (origin when `fixed_point` is `None`).
    pub fn new(
        name: impl Into<String>,
        components: Vec<Expression>,
        fixed_point: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = check_components(&components)?;
        let fixed_point = fixed_point.unwrap_or_else(|| vec![0.0; n]);
        if fixed_point.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                got: fixed_point.len(),
            });
        }
        let sys = MapSystem {
            name: name.into(),
            jacobian: jacobian_exprs(&components)?,
            components,
            fixed_point,
        };
        let image = sys.apply(&sys.fixed_point);
        let residual = distance(&image, &sys.fixed_point);
        if !(residual <= FIXED_POINT_TOL) {
            return Err(Error::NotFixed { residual });
        }
        Ok(sys)
    }

    /// Convenience constructor from expression strings, fixed point at the origin.
    pub fn from_strs(name: &str, vars: &[&str], components: &[&str]) -> Result<Self> {
        Self::new(name, parse_components(vars, components)?, None)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    pub fn fixed_point(&self) -> &[f64] {
        &self.fixed_point
    }

    /// Writes `F(x)` into `out`.
    #[inline]
    pub fn step_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.arity()];
        self.step_into(x, &mut out);
        out
    }

    /// Symbolic Jacobian `DF` evaluated at `x`.
    pub fn jacobian_at(&self, x: &[f64]) -> DMatrix<f64> {
        eval_matrix(&self.jacobian, x)
    }

    /// One Newton solve of `F(y) = target`, seeded at `target`.
    fn invert(&self, target: &[f64], index: usize) -> Result<Vec<f64>> {
        let n = self.arity();
        let mut y = target.to_vec();
        let mut fy = vec![0.0; n];
        for _ in 0..NEWTON_MAX_STEPS {
            self.step_into(&y, &mut fy);
            let residual: Vec<f64> = fy.iter().zip(target).map(|(a, b)| a - b).collect();
            if residual.iter().all(|r| *r == 0.0) {
                return Ok(y);
            }
            let delta = if n == 1 {
                let d = self.jacobian[0][0].eval(&y);
                if !(d.abs() > SINGULAR_DET) {
                    return Err(Error::SingularJacobian { index, det: d });
                }
                vec![residual[0] / d]
            } else {
                let lu = self.jacobian_at(&y).lu();
                let det = lu.determinant();
                if !(det.abs() > SINGULAR_DET) {
                    return Err(Error::SingularJacobian { index, det });
                }
                let sol = lu
                    .solve(&DVector::from_vec(residual))
                    .ok_or(Error::SingularJacobian { index, det })?;
                sol.as_slice().to_vec()
            };
            for (yi, di) in y.iter_mut().zip(&delta) {
                *yi -= di;
            }
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::NewtonDiverged { index });
            }
            if norm(&delta) <= NEWTON_TOL * norm(&y) + f64::MIN_POSITIVE {
                return Ok(y);
            }
        }
        Err(Error::NewtonDiverged { index })
    }
}

/// A continuous system `dx/dt = F(x)` with a declared singularity.
#[derive(Debug, Clone)]
pub struct FlowSystem {
    name: String,
    components: Vec<Expression>,
    jacobian: Vec<Vec<Expression>>,
    singularity: Vec<f64>,
    rk4_steps: usize,
    integration_box: f64,
}

impl FlowSystem {
    pub fn new(
        name: impl Into<String>,
        components: Vec<Expression>,
        singularity: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = check_components(&components)?;
        let singularity = singularity.unwrap_or_else(|| vec![0.0; n]);
        if singularity.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                got: singularity.len(),
            });
        }
        let flow = FlowSystem {
            name: name.into(),
            jacobian: jacobian_exprs(&components)?,
            components,
            singularity,
            rk4_steps: DEFAULT_RK4_STEPS,
            integration_box: 1e6,
        };
        let mut v = vec![0.0; n];
        flow.rhs(&flow.singularity, &mut v);
        let residual = norm(&v);
        if !(residual <= FIXED_POINT_TOL) {
            return Err(Error::NotFixed { residual });
        }
        Ok(flow)
    }

    pub fn from_strs(name: &str, vars: &[&str], components: &[&str]) -> Result<Self> {
        Self::new(name, parse_components(vars, components)?, None)
    }

    /// Overrides the number of RK4 steps per unit time.
    pub fn with_rk4_steps(mut self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("rk4 steps must be positive".into()));
        }
        self.rk4_steps = steps;
        Ok(self)
    }

    /// Overrides the max-norm radius (around the singularity) outside which
    /// integration is refused.
    pub fn with_integration_box(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("integration box must be positive".into()));
        }
        self.integration_box = radius;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    pub fn singularity(&self) -> &[f64] {
        &self.singularity
    }

    pub fn rk4_steps(&self) -> usize {
        self.rk4_steps
    }

    #[inline]
    pub fn rhs(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }

    pub fn jacobian_at(&self, x: &[f64]) -> DMatrix<f64> {
        eval_matrix(&self.jacobian, x)
    }

    /// Time-one map `φ_1(x)`.
    pub fn unit_time_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.flow_for_unit_time(x, 1.0)
    }

    /// Time-reversed unit map `φ_{-1}(x)`, integrating the negated field.
    pub fn unit_time_map_backward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.flow_for_unit_time(x, -1.0)
    }

    fn flow_for_unit_time(&self, x: &[f64], sign: f64) -> Result<Vec<f64>> {
        let n = self.arity();
        if x.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let outside = x
            .iter()
            .zip(&self.singularity)
            .any(|(a, b)| !((a - b).abs() <= self.integration_box));
        if outside {
            return Err(Error::InvalidParameter(format!(
                "state outside the integration box of radius {}",
                self.integration_box
            )));
        }
        let mut rk = Rk4::new(n);
        let mut state = x.to_vec();
        let h = sign / self.rk4_steps as f64;
        for _ in 0..self.rk4_steps {
            rk.step(self, &mut state, h);
        }
        if state.iter().all(|v| v.is_finite()) {
            Ok(state)
        } else {
            Err(Error::NonFiniteIntegration)
        }
    }

    /// Central-difference Jacobian of the unit-time map at `x`.
    pub fn unit_time_jacobian(&self, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let n = self.arity();
        let mut jac = DMatrix::zeros(n, n);
        let mut probe = x.to_vec();
        for j in 0..n {
            probe[j] = x[j] + h;
            let plus = self.unit_time_map(&probe)?;
            probe[j] = x[j] - h;
            let minus = self.unit_time_map(&probe)?;
            probe[j] = x[j];
            for i in 0..n {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// Taylor coefficients `[c_0, ..., c_order]` of the unit-time map of a
    /// one-dimensional flow around its singularity, extracted by a
    /// least-squares polynomial fit on Chebyshev nodes in `[-radius, radius]`.
    pub fn unit_time_taylor(&self, order: usize, radius: f64) -> Result<Vec<f64>> {
        if self.arity() != 1 {
            return Err(Error::InvalidSystem(
                "unit-time Taylor extraction needs a one-dimensional flow".into(),
            ));
        }
        // Fit a few degrees beyond `order` so truncation error stays out of
        // the requested coefficients.
        let degree = order + 4;
        let nodes = 4 * (degree + 1);
        let x0 = self.singularity[0];
        let mut design = DMatrix::zeros(nodes, degree + 1);
        let mut rhs = DVector::zeros(nodes);
        for k in 0..nodes {
            let t = radius
                * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * nodes) as f64).cos();
            let y = self.unit_time_map(&[x0 + t])?[0] - x0;
            let mut p = 1.0;
            for j in 0..=degree {
                design[(k, j)] = p;
                p *= t;
            }
            rhs[k] = y;
        }
        let svd = design.svd(true, true);
        let coeffs = svd
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::Inconsistent(e.to_string()))?;
        Ok(coeffs.iter().take(order + 1).copied().collect())
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn step(&mut self, flow: &FlowSystem, y: &mut [f64], h: f64) {
        let n = y.len();
        flow.rhs(y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        flow.rhs(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        flow.rhs(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        flow.rhs(&self.tmp, &mut self.k4);
        for i in 0..n {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Which way an orbit runs relative to the generating map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Inverse,
}

/// Why orbit generation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum Termination {
    Converged { delta: f64 },
    MaxIterations,
    Diverged { radius: f64 },
    LandedOnFixedPoint,
}

/// Stability of a flow singularity, chosen by the caller. Semistable
/// one-dimensional singularities need the caller to pick the side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityHint {
    Stable,
    Unstable,
}

/// Stopping rules for orbit generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSettings {
    pub max_n: usize,
    pub delta_conv: f64,
    /// Divergence radius; `None` means `1e3 * (1 + |x1 - x0|)`.
    pub r_div: Option<f64>,
}

impl Default for OrbitSettings {
    fn default() -> Self {
        OrbitSettings {
            max_n: 1_000_000,
            delta_conv: 1e-12,
            r_div: None,
        }
    }
}

impl OrbitSettings {
    pub fn with_max_n(max_n: usize) -> Self {
        OrbitSettings {
            max_n,
            ..Default::default()
        }
    }
}

/// A finite orbit `x_1, ..., x_M` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    dim: usize,
    data: Vec<f64>,
    fixed_point: Vec<f64>,
    direction: Direction,
    termination: Termination,
    source: String,
}

impl Orbit {
    /// Wraps an explicit point sequence (e.g. a closed-form sequence) as an orbit
    /// terminated by `MaxIterations`.
    pub fn from_points(points: &[Vec<f64>], fixed_point: Vec<f64>) -> Result<Self> {
        let dim = fixed_point.len();
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let mut data = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::ArityMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteOrbit { index: i });
            }
            data.extend_from_slice(p);
        }
        Ok(Orbit {
            dim,
            data,
            fixed_point,
            direction: Direction::Forward,
            termination: Termination::MaxIterations,
            source: "explicit".into(),
        })
    }

    /// One-dimensional convenience form of [`Orbit::from_points`].
    pub fn from_scalars(values: &[f64], fixed_point: f64) -> Result<Self> {
        let pts: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Self::from_points(&pts, vec![fixed_point])
    }

    pub(crate) fn with_parts(
        dim: usize,
        data: Vec<f64>,
        fixed_point: Vec<f64>,
        direction: Direction,
        termination: Termination,
        source: String,
    ) -> Self {
        debug_assert_eq!(data.len() % dim, 0);
        Orbit {
            dim,
            data,
            fixed_point,
            direction,
            termination,
            source,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn initial(&self) -> &[f64] {
        self.point(0)
    }

    pub fn last(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    /// Values of coordinate `k` along the orbit.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.points().map(|p| p[k]).collect()
    }

    pub fn fixed_point(&self) -> &[f64] {
        &self.fixed_point
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// Name of the generating system.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.data
    }
}

/// Shared iteration driver: `step(x, out, index)` produces the next point.
fn iterate<F>(
    x1: &[f64],
    fixed_point: &[f64],
    settings: &OrbitSettings,
    direction: Direction,
    source: &str,
    mut step: F,
) -> Result<Orbit>
where
    F: FnMut(&[f64], &mut [f64], usize) -> Result<()>,
{
    let n = fixed_point.len();
    if x1.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: x1.len(),
        });
    }
    if !x1.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("initial point is not finite".into()));
    }
    if !(settings.delta_conv > 0.0) {
        return Err(Error::InvalidParameter("delta_conv must be positive".into()));
    }
    if settings.max_n == 0 {
        return Err(Error::InvalidParameter("max_n must be positive".into()));
    }
    let d1 = distance(x1, fixed_point);
    let r_div = settings.r_div.unwrap_or(1e3 * (1.0 + d1));
    if !(r_div > d1) {
        return Err(Error::InvalidParameter(
            "divergence radius must exceed the initial distance".into(),
        ));
    }

    let mut data = Vec::with_capacity(n * settings.max_n.min(1 << 20));
    let mut current = x1.to_vec();
    let mut next = vec![0.0; n];
    let termination = loop {
        data.extend_from_slice(&current);
        let d = distance(&current, fixed_point);
        if d == 0.0 {
            break Termination::LandedOnFixedPoint;
        }
        if d < settings.delta_conv {
            break Termination::Converged {
                delta: settings.delta_conv,
            };
        }
        if d > r_div {
            break Termination::Diverged { radius: r_div };
        }
        let index = data.len() / n;
        if index >= settings.max_n {
            break Termination::MaxIterations;
        }
        step(&current, &mut next, index)?;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteOrbit { index });
        }
        std::mem::swap(&mut current, &mut next);
    };
    Ok(Orbit::with_parts(
        n,
        data,
        fixed_point.to_vec(),
        direction,
        termination,
        source.to_string(),
    ))
}

/// Forward orbit `x_{j+1} = F(x_j)`.
pub fn generate_orbit(sys: &MapSystem, x1: &[f64], settings: &OrbitSettings) -> Result<Orbit> {
    iterate(
        x1,
        sys.fixed_point(),
        settings,
        Direction::Forward,
        sys.name(),
        |x, out, _| {
            sys.step_into(x, out);
            Ok(())
        },
    )
}

/// Inverse orbit `x_{j+1} = F^{-1}(x_j)`, each step solved by Newton iteration.
pub fn generate_inverse_orbit(
    sys: &MapSystem,
    x1: &[f64],
    settings: &OrbitSettings,
) -> Result<Orbit> {
    iterate(
        x1,
        sys.fixed_point(),
        settings,
        Direction::Inverse,
        sys.name(),
        |x, out, index| {
            out.copy_from_slice(&sys.invert(x, index)?);
            Ok(())
        },
    )
}

/// Orbit of the unit-time map: forward when the singularity is stable,
/// time-reversed when it is unstable.
pub fn generate_flow_orbit(
    flow: &FlowSystem,
    x1: &[f64],
    settings: &OrbitSettings,
    hint: StabilityHint,
) -> Result<Orbit> {
    let (direction, sign) = match hint {
        StabilityHint::Stable => (Direction::Forward, 1.0),
        StabilityHint::Unstable => (Direction::Inverse, -1.0),
    };
    iterate(
        x1,
        flow.singularity(),
        settings,
        direction,
        flow.name(),
        |x, out, _| {
            out.copy_from_slice(&flow.flow_for_unit_time(x, sign)?);
            Ok(())
        },
    )
}
