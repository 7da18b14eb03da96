//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; failures come back as `{"error": "..."}`.

use orbitdim::boxdim::{estimate_dimension, tail_exponent_dimension, EstimatorConfig};
use orbitdim::classify::{classify_map_fixed_point, detect_nonhyperbolic_via_dimension};
use orbitdim::dynsys::{generate_orbit, MapSystem, OrbitSettings};
use orbitdim::expr::Expression;
use orbitdim::manifolds::{restrict_to_manifold, solve_invariance, ManifoldKind};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_ITERATIONS: usize = 2_000_000;

fn respond<T: Serialize>(r: orbitdim::Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("serializable"),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

#[derive(Serialize)]
pub struct KMapResult {
    pub k: u32,
    pub predicted: f64,
    pub value: f64,
    pub tail: Option<f64>,
    pub r_squared: f64,
    pub orbit_length: usize,
    /// `(ln ε, ln |S_ε|)` for every sampled ε.
    pub loglog: Vec<(f64, f64)>,
    pub window: (f64, f64),
    pub slope: f64,
}

/// Box dimension of the orbit of `x - x^k` from `x0`.
pub fn kmap_dimension_impl(k: u32, x0: f64, max_n: usize) -> orbitdim::Result<KMapResult> {
    if !(2..=8).contains(&k) {
        return Err(orbitdim::Error::InvalidParameter("k must be between 2 and 8".into()));
    }
    let sys = MapSystem::from_strs("k-map", &["x"], &[&format!("x - x^{k}")])?;
    let settings = OrbitSettings::with_max_n(max_n.clamp(100, MAX_ITERATIONS));
    let orbit = generate_orbit(&sys, &[x0], &settings)?;
    let cfg = EstimatorConfig::default();
    let est = estimate_dimension(&orbit, &cfg)?;
    let tail = tail_exponent_dimension(&orbit, &cfg).ok().map(|t| t.value);
    Ok(KMapResult {
        k,
        predicted: 1.0 - 1.0 / k as f64,
        value: est.value,
        tail,
        r_squared: est.r_squared,
        orbit_length: orbit.len(),
        loglog: est
            .measurements
            .iter()
            .map(|m| (m.epsilon.ln(), m.measure.ln()))
            .collect(),
        window: (est.eps_min.ln(), est.eps_max.ln()),
        slope: est.slope,
    })
}

#[wasm_bindgen]
pub fn kmap_dimension(k: u32, x0: f64, max_n: u32) -> String {
    respond(kmap_dimension_impl(k, x0, max_n as usize))
}

/// Spectral verdict for a planar map at the origin, plus the detector on the
/// orbit from `(x0, y0)`.
pub fn classify_planar_impl(fx: &str, fy: &str, x0: f64, y0: f64) -> orbitdim::Result<serde_json::Value> {
    let vars = ["x", "y"];
    let comps = vec![Expression::parse(fx, &vars)?, Expression::parse(fy, &vars)?];
    let sys = MapSystem::new("user map", comps, None)?;
    let spectral = classify_map_fixed_point(&sys, &[0.0, 0.0], orbitdim::classify::DEFAULT_ETA)?;
    let settings = OrbitSettings::with_max_n(200_000);
    let detector = generate_orbit(&sys, &[x0, y0], &settings).and_then(|o| {
        detect_nonhyperbolic_via_dimension(&o, orbitdim::classify::DEFAULT_THETA, &EstimatorConfig::default())
    });
    let detector = match detector {
        Ok(r) => serde_json::to_value(r).expect("serializable"),
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(json!({ "spectral": spectral, "detector": detector }))
}

#[wasm_bindgen]
pub fn classify_planar(fx: &str, fy: &str, x0: f64, y0: f64) -> String {
    respond(classify_planar_impl(fx, fy, x0, y0))
}

/// Stable and unstable manifold series of the quadratic saddle alongside the
/// closed-form quadratic and cubic coefficients.
pub fn saddle_manifolds_impl(c: &[f64], order: usize) -> orbitdim::Result<serde_json::Value> {
    let [l1, l2, a1, a2, a3, b1, b2, b3]: [f64; 8] = c
        .try_into()
        .map_err(|_| orbitdim::Error::InvalidParameter("expected 8 coefficients".into()))?;
    let params = [
        ("λ1", l1),
        ("λ2", l2),
        ("a1", a1),
        ("a2", a2),
        ("a3", a3),
        ("b1", b1),
        ("b2", b2),
        ("b3", b3),
    ];
    let comps = [
        "λ1*x + a1*x^2 + a2*x*y + a3*y^2",
        "λ2*y + b1*x^2 + b2*x*y + b3*y^2",
    ]
    .iter()
    .map(|t| Expression::parse_with_params(t, &["x", "y"], &params))
    .collect::<orbitdim::Result<Vec<_>>>()?;
    let sys = MapSystem::new("quadratic saddle", comps, None)?;
    let (stable_axis, unstable_axis) = if l1.abs() < 1.0 { (0, 1) } else { (1, 0) };
    let stable = solve_invariance(&sys, stable_axis, ManifoldKind::Stable, order)?;
    let unstable = solve_invariance(&sys, unstable_axis, ManifoldKind::Unstable, order)?;
    let restricted = restrict_to_manifold(&sys, &stable)?;
    let (d12, d13) = (l1 * l1 - l2, l1.powi(3) - l2);
    let (d22, d23) = (l2 * l2 - l1, l2.powi(3) - l1);
    Ok(json!({
        "stable": stable,
        "unstable": unstable,
        "restricted_stable": restricted.coefficients,
        "closed_form": {
            "alpha2": b1 / d12,
            "alpha3": b1 * (b2 - 2.0 * a1 * l1) / (d12 * d13),
            "beta2": a3 / d22,
            "beta3": a3 * (a2 - 2.0 * b3 * l2) / (d22 * d23),
        },
    }))
}

#[wasm_bindgen]
pub fn saddle_manifolds(coefficients: &[f64], order: u32) -> String {
    respond(saddle_manifolds_impl(coefficients, order as usize))
}
