//! Box-dimension estimation for finite orbits.
//!
//! Two measurements of the ε-neighborhood `S_ε` are available: the exact
//! Lebesgue measure of the union of intervals `(x - ε, x + ε)` for 1-D point
//! sets, and the number of occupied grid cells of side ε in any dimension.
//! A dimension is read off the log-log slope over an automatically selected
//! window of scales: `ε_max = diam/10`, `ε_min = max(last gap, diam * floor)`,
//! and among 48 log-spaced samples the contiguous 16-sample window with the
//! best coefficient of determination is used.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynsys::{distance, Orbit};
use crate::error::{Error, Result};

/// Projected coordinates closer than this are treated as one value.
pub const DEDUP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMethod {
    /// Exact length of the 1-D ε-neighborhood.
    Exact1d,
    /// Number of occupied grid cells of side ε.
    Grid,
}

impl MeasureMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasureMethod::Exact1d => "exact_1d",
            MeasureMethod::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeighborhoodMeasurement {
    pub epsilon: f64,
    pub measure: f64,
    pub method: MeasureMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionMethod {
    NeighborhoodSlope,
    BoxCountSlope,
    TailExponent,
}

/// A single box-dimension estimate with its fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub value: f64,
    /// Raw slope of the fitted line (log-measure vs log ε, log N vs log 1/ε,
    /// or log distance vs log n, depending on the method).
    pub slope: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub samples: usize,
    pub r_squared: f64,
    pub method: DimensionMethod,
    /// All measurements equal (or a single point): value forced to zero.
    pub degenerate: bool,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub measurements: Vec<NeighborhoodMeasurement>,
}

impl DimensionEstimate {
    fn degenerate(method: DimensionMethod, reason: &str) -> Self {
        DimensionEstimate {
            value: 0.0,
            slope: 0.0,
            eps_min: 0.0,
            eps_max: 0.0,
            samples: 0,
            r_squared: 0.0,
            method,
            degenerate: true,
            warnings: vec![reason.to_string()],
            measurements: Vec::new(),
        }
    }
}

/// Approximate lower and upper `s`-dimensional Minkowski contents over the fit window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContentEstimate {
    pub exponent: f64,
    pub lower: f64,
    pub upper: f64,
    /// `(ε, |S_ε| / ε^{n-s})` for every ε in the window, increasing in ε.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpsGrid {
    /// Log-spaced samples between the automatically selected bounds.
    Auto { samples: usize },
    /// Caller-supplied scales, strictly increasing and positive.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowPolicy {
    /// Slide a window of `width` consecutive samples; keep the best R².
    BestR2 { width: usize },
    /// Fit all samples.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub grid: EpsGrid,
    pub window: WindowPolicy,
    /// `ε_max = ceiling_ratio * diameter`.
    pub ceiling_ratio: f64,
    /// `ε_min >= floor_ratio * diameter`.
    pub floor_ratio: f64,
    pub min_points: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            grid: EpsGrid::Auto { samples: 48 },
            window: WindowPolicy::BestR2 { width: 16 },
            ceiling_ratio: 0.1,
            floor_ratio: 1e-9,
            min_points: 100,
        }
    }
}

impl EstimatorConfig {
    pub fn with_samples(samples: usize) -> Self {
        EstimatorConfig {
            grid: EpsGrid::Auto { samples },
            ..Default::default()
        }
    }
}

/// Exact measure of `⋃ (x_j - ε, x_j + ε)` for an ascending point list.
pub fn exact_measure_1d(sorted: &[f64], eps: f64) -> Result<NeighborhoodMeasurement> {
    if sorted.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if sorted.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("points must be sorted ascending".into()));
    }
    Ok(NeighborhoodMeasurement {
        epsilon: eps,
        measure: sweep_measure(sorted, eps),
        method: MeasureMethod::Exact1d,
    })
}

/// Sweep-line union length: each gap contributes `min(gap, 2ε)`.
fn sweep_measure(sorted: &[f64], eps: f64) -> f64 {
    let two_eps = 2.0 * eps;
    let mut total = two_eps;
    for w in sorted.windows(2) {
        total += (w[1] - w[0]).min(two_eps);
    }
    total
}

/// Number of distinct cells of side ε, anchored at `anchor`, occupied by the
/// row-major `points` of dimension `anchor.len()`.
pub fn grid_box_count(points: &[f64], anchor: &[f64], eps: f64) -> Result<NeighborhoodMeasurement> {
    let dim = anchor.len();
    if points.is_empty() || dim == 0 {
        return Err(Error::EmptyPointSet);
    }
    if !points.len().is_multiple_of(dim) {
        return Err(Error::ArityMismatch {
            expected: dim,
            got: points.len() % dim,
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    Ok(NeighborhoodMeasurement {
        epsilon: eps,
        measure: count_cells(points, anchor, eps) as f64,
        method: MeasureMethod::Grid,
    })
}

fn cell(v: f64, anchor: f64, eps: f64) -> i64 {
    ((v - anchor) / eps).floor() as i64
}

fn count_cells(points: &[f64], anchor: &[f64], eps: f64) -> usize {
    match anchor.len() {
        1 => {
            let mut cells: Vec<i64> = points.iter().map(|&v| cell(v, anchor[0], eps)).collect();
            cells.sort_unstable();
            cells.dedup();
            cells.len()
        }
        2 => {
            let mut cells: Vec<(i64, i64)> = points
                .chunks_exact(2)
                .map(|p| (cell(p[0], anchor[0], eps), cell(p[1], anchor[1], eps)))
                .collect();
            cells.sort_unstable();
            cells.dedup();
            cells.len()
        }
        dim => {
            let mut cells: Vec<Vec<i64>> = points
                .chunks_exact(dim)
                .map(|p| p.iter().zip(anchor).map(|(&v, &a)| cell(v, a, eps)).collect())
                .collect();
            cells.sort_unstable();
            cells.dedup();
            cells.len()
        }
    }
}

/// Point data prepared for estimation.
struct PointSet {
    dim: usize,
    /// Row-major coordinates; for `dim == 1` sorted ascending and deduplicated.
    data: Vec<f64>,
    anchor: Vec<f64>,
    diameter: f64,
    last_gap: f64,
    orbit_len: usize,
}

impl PointSet {
    fn from_orbit(orbit: &Orbit) -> Self {
        let m = orbit.len();
        let last_gap = if m >= 2 {
            distance(orbit.point(m - 1), orbit.point(m - 2))
        } else {
            0.0
        };
        if orbit.dim() == 1 {
            return Self::from_values(orbit.raw().to_vec(), orbit.fixed_point()[0], last_gap, m);
        }
        PointSet {
            dim: orbit.dim(),
            data: orbit.raw().to_vec(),
            anchor: orbit.fixed_point().to_vec(),
            diameter: diameter_nd(orbit.raw(), orbit.dim()),
            last_gap,
            orbit_len: m,
        }
    }

    fn from_values(mut values: Vec<f64>, anchor: f64, last_gap: f64, orbit_len: usize) -> Self {
        values.sort_unstable_by(f64::total_cmp);
        values.dedup_by(|b, a| (*b - *a).abs() < DEDUP_TOL);
        let diameter = values[values.len() - 1] - values[0];
        PointSet {
            dim: 1,
            data: values,
            anchor: vec![anchor],
            diameter,
            last_gap,
            orbit_len,
        }
    }

    fn measure(&self, method: MeasureMethod, eps: f64) -> f64 {
        match method {
            MeasureMethod::Exact1d => sweep_measure(&self.data, eps),
            MeasureMethod::Grid => count_cells(&self.data, &self.anchor, eps) as f64,
        }
    }
}

/// Diameter of a row-major point set. Exact for small sets; for large sets
/// the maximum distance from the per-axis extreme points, which equals the
/// diameter whenever a diametral pair contains an axis extreme.
fn diameter_nd(data: &[f64], dim: usize) -> f64 {
    let pts: Vec<&[f64]> = data.chunks_exact(dim).collect();
    let mut best = 0.0f64;
    if pts.len() <= 4096 {
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max(distance(pts[i], pts[j]));
            }
        }
        return best;
    }
    let mut extremes = Vec::with_capacity(2 * dim);
    for k in 0..dim {
        let by_k = |a: &&&[f64], b: &&&[f64]| a[k].total_cmp(&b[k]);
        extremes.push(*pts.iter().min_by(by_k).unwrap());
        extremes.push(*pts.iter().max_by(by_k).unwrap());
    }
    for e in extremes {
        for p in &pts {
            best = best.max(distance(e, p));
        }
    }
    best
}

/// Least-squares line `y = a x + b`; returns `(a, b, R²)`. A window with no
/// variation in `y` is a perfect horizontal fit.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let r2 = if syy > 0.0 {
        let mut ss_res = 0.0;
        for (&xi, &yi) in x.iter().zip(y) {
            let r = yi - (a * xi + b);
            ss_res += r * r;
        }
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (a, b, r2)
}

fn log_spaced(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..samples)
        .map(|i| (a + (b - a) * i as f64 / (samples - 1) as f64).exp())
        .collect()
}

fn epsilon_grid(set: &PointSet, cfg: &EstimatorConfig) -> Result<Vec<f64>> {
    match &cfg.grid {
        EpsGrid::Explicit(eps) => {
            if eps.len() < 32 {
                return Err(Error::InvalidParameter(
                    "an explicit epsilon grid needs at least 32 samples".into(),
                ));
            }
            if !eps.iter().all(|e| *e > 0.0 && e.is_finite())
                || eps.windows(2).any(|w| w[1] <= w[0])
            {
                return Err(Error::InvalidParameter(
                    "epsilon grid must be positive and strictly increasing".into(),
                ));
            }
            Ok(eps.clone())
        }
        EpsGrid::Auto { samples } => {
            if *samples < 32 {
                return Err(Error::InvalidParameter(
                    "the epsilon grid needs at least 32 samples".into(),
                ));
            }
            let eps_max = set.diameter * cfg.ceiling_ratio;
            let eps_min = set.last_gap.max(set.diameter * cfg.floor_ratio);
            if !(eps_min < eps_max) {
                return Err(Error::EmptyWindow { eps_min, eps_max });
            }
            Ok(log_spaced(eps_min, eps_max, *samples))
        }
    }
}

fn estimate_set(
    set: &PointSet,
    method: MeasureMethod,
    cfg: &EstimatorConfig,
) -> Result<DimensionEstimate> {
    let dim_method = match method {
        MeasureMethod::Exact1d => DimensionMethod::NeighborhoodSlope,
        MeasureMethod::Grid => DimensionMethod::BoxCountSlope,
    };
    if method == MeasureMethod::Exact1d && set.dim != 1 {
        return Err(Error::InvalidParameter(
            "exact neighborhood measure is only available in one dimension".into(),
        ));
    }
    if set.diameter == 0.0 {
        return Ok(DimensionEstimate::degenerate(dim_method, "single distinct point"));
    }
    if set.orbit_len < cfg.min_points {
        return Err(Error::InsufficientData(format!(
            "{} points, at least {} required",
            set.orbit_len, cfg.min_points
        )));
    }
    let eps = epsilon_grid(set, cfg)?;
    let measurements: Vec<NeighborhoodMeasurement> = eps
        .par_iter()
        .map(|&e| NeighborhoodMeasurement {
            epsilon: e,
            measure: set.measure(method, e),
            method,
        })
        .collect();

    let ambient = set.dim as f64;
    if measurements.iter().all(|m| m.measure == measurements[0].measure) {
        let mut est = DimensionEstimate::degenerate(dim_method, "all measurements equal");
        est.eps_min = eps[0];
        est.eps_max = eps[eps.len() - 1];
        est.samples = eps.len();
        est.measurements = measurements;
        return Ok(est);
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) = match method {
        MeasureMethod::Exact1d => measurements
            .iter()
            .map(|m| (m.epsilon.ln(), m.measure.ln()))
            .unzip(),
        MeasureMethod::Grid => measurements
            .iter()
            .map(|m| (-m.epsilon.ln(), m.measure.ln()))
            .unzip(),
    };
    let width = match cfg.window {
        WindowPolicy::Full => xs.len(),
        WindowPolicy::BestR2 { width } => {
            if width < 3 {
                return Err(Error::InvalidParameter("fit window needs at least 3 samples".into()));
            }
            width.min(xs.len())
        }
    };
    let mut best: Option<(usize, f64, f64)> = None;
    for start in 0..=xs.len() - width {
        let (slope, _, r2) = linear_fit(&xs[start..start + width], &ys[start..start + width]);
        // Ties keep the smallest-ε window.
        if best.is_none_or(|(_, _, r)| r2 > r) {
            best = Some((start, slope, r2));
        }
    }
    let (start, slope, r2) = best.expect("at least one window");
    let raw = match method {
        MeasureMethod::Exact1d => ambient - slope,
        MeasureMethod::Grid => slope,
    };
    let mut warnings = Vec::new();
    if r2 < 0.95 {
        warnings.push(format!("low R² ({r2:.4}) in the selected window"));
    }
    if !(0.0..=ambient).contains(&raw) {
        warnings.push(format!("raw estimate {raw:.4} clamped to [0, {ambient}]"));
    }
    Ok(DimensionEstimate {
        value: raw.clamp(0.0, ambient),
        slope,
        eps_min: eps[start],
        eps_max: eps[start + width - 1],
        samples: width,
        r_squared: r2,
        method: dim_method,
        degenerate: false,
        warnings,
        measurements,
    })
}

/// Box dimension of an orbit: exact neighborhood slope in one dimension,
/// grid box counting otherwise.
pub fn estimate_dimension(orbit: &Orbit, cfg: &EstimatorConfig) -> Result<DimensionEstimate> {
    let method = if orbit.dim() == 1 {
        MeasureMethod::Exact1d
    } else {
        MeasureMethod::Grid
    };
    estimate_with(orbit, method, cfg)
}

/// Box dimension with an explicitly chosen measurement.
pub fn estimate_with(
    orbit: &Orbit,
    method: MeasureMethod,
    cfg: &EstimatorConfig,
) -> Result<DimensionEstimate> {
    estimate_set(&PointSet::from_orbit(orbit), method, cfg)
}

/// Dimension from the power-law decay `|x_n - x0| ~ n^{-p}` of a monotone
/// 1-D orbit: `1 / (1 + p)`. Exponential decay (a better fit of log-distance
/// against `n` than against `log n`) gives 0.
pub fn tail_exponent_dimension(orbit: &Orbit, cfg: &EstimatorConfig) -> Result<DimensionEstimate> {
    if orbit.dim() != 1 {
        return Err(Error::InvalidParameter(
            "tail exponent needs a one-dimensional orbit".into(),
        ));
    }
    let x0 = orbit.fixed_point()[0];
    let xs = orbit.raw();
    if xs.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "{} points, at least 20 required for a tail fit",
            xs.len()
        )));
    }
    let dist: Vec<f64> = xs.iter().map(|x| (x - x0).abs()).collect();
    let monotone = xs[10..].windows(2).all(|w| {
        let toward = (w[1] - x0).abs() < (w[0] - x0).abs();
        let same_side = (w[1] - x0).signum() == (w[0] - x0).signum() || w[1] == x0;
        toward && same_side
    });
    if !monotone {
        let mut est = estimate_dimension(orbit, cfg)?;
        est.warnings
            .push("non-monotone tail: fell back to the neighborhood estimator".into());
        return Ok(est);
    }
    let start = xs.len() / 5;
    let (mut ln_n, mut n_lin, mut ln_d) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &d) in dist.iter().enumerate().skip(start) {
        if d > 0.0 {
            let n = (i + 1) as f64;
            ln_n.push(n.ln());
            n_lin.push(n);
            ln_d.push(d.ln());
        }
    }
    if ln_d.len() < 3 {
        return Err(Error::InsufficientData("tail reached the fixed point".into()));
    }
    let (slope, _, r2_power) = linear_fit(&ln_n, &ln_d);
    let (_, _, r2_exp) = linear_fit(&n_lin, &ln_d);
    let p = -slope;
    let d_lo = ln_d.iter().cloned().fold(f64::INFINITY, f64::min).exp();
    let d_hi = ln_d.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
    let mut warnings = Vec::new();
    let value = if r2_exp > r2_power {
        warnings.push("exponential tail: decay exponent unbounded".into());
        0.0
    } else if p <= 0.0 {
        warnings.push(format!("non-decaying tail (p = {p:.4})"));
        1.0
    } else {
        1.0 / (1.0 + p)
    };
    Ok(DimensionEstimate {
        value,
        slope,
        eps_min: d_lo,
        eps_max: d_hi,
        samples: ln_d.len(),
        r_squared: r2_power,
        method: DimensionMethod::TailExponent,
        degenerate: false,
        warnings,
        measurements: Vec::new(),
    })
}

/// Per-axis box dimensions: each coordinate projection is estimated with the
/// exact 1-D neighborhood measure.
pub fn projective_dimensions(
    orbit: &Orbit,
    cfg: &EstimatorConfig,
) -> Result<Vec<DimensionEstimate>> {
    if orbit.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let m = orbit.len();
    (0..orbit.dim())
        .map(|k| {
            let values = orbit.coordinate(k);
            let last_gap = if m >= 2 {
                (values[m - 1] - values[m - 2]).abs()
            } else {
                0.0
            };
            let set = PointSet::from_values(values, orbit.fixed_point()[k], last_gap, m);
            estimate_set(&set, MeasureMethod::Exact1d, cfg)
        })
        .collect()
}

/// Minkowski content ratios `|S_ε| / ε^{n-s}` over the estimator's fit window.
///
/// For grid counts, `|S_ε|` is replaced by the surrogate `N(ε) ε^n`.
pub fn minkowski_content(orbit: &Orbit, s: f64, cfg: &EstimatorConfig) -> Result<ContentEstimate> {
    let n = orbit.dim() as f64;
    if !(0.0..=n).contains(&s) {
        return Err(Error::InvalidParameter(format!("exponent {s} outside [0, {n}]")));
    }
    let est = estimate_dimension(orbit, cfg)?;
    if est.degenerate && est.measurements.is_empty() {
        return Err(Error::InsufficientData("degenerate point set".into()));
    }
    let samples: Vec<(f64, f64)> = est
        .measurements
        .iter()
        .filter(|m| m.epsilon >= est.eps_min && m.epsilon <= est.eps_max)
        .map(|m| {
            let ratio = match m.method {
                MeasureMethod::Exact1d => m.measure / m.epsilon.powf(n - s),
                MeasureMethod::Grid => m.measure * m.epsilon.powf(s),
            };
            (m.epsilon, ratio)
        })
        .collect();
    let lower = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let upper = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(ContentEstimate {
        exponent: s,
        lower,
        upper,
        samples,
    })
}
