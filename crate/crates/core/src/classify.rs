//! Hyperbolicity of fixed points and flow singularities.
//!
//! Two independent routes: the spectrum of the Jacobian (multipliers against
//! the unit circle for maps, real parts against zero for flows), and the
//! projective-dimension detector, which flags a fixed point as nonhyperbolic
//! when some coordinate projection of a converging orbit has positive box
//! dimension. The detector is one-directional and never certifies
//! hyperbolicity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::boxdim::{projective_dimensions, DimensionEstimate, EstimatorConfig};
use crate::dynsys::{distance, norm, FlowSystem, MapSystem, Orbit, Termination, FIXED_POINT_TOL};
use crate::eigen::eigenvalues;
use crate::error::{Error, Result};

/// Width of the band around the unit circle (maps) or imaginary axis (flows).
pub const DEFAULT_ETA: f64 = 1e-6;
/// Detector threshold on projective dimensions.
pub const DEFAULT_THETA: f64 = 0.2;
/// Minimum R² for a projective dimension to count as evidence.
pub const R2_GATE: f64 = 0.95;
/// Agreement required between unit-time multipliers and `e^{Re λ}`.
pub const UNIT_TIME_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;
const PAIRING_TOL: f64 = 1e-9;

/// A complex number serialized as `{re, im}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Complex {
    fn from(c: Complex64) -> Self {
        Complex { re: c.re, im: c.im }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Map,
    Flow,
}

/// Eigenvalues of the Jacobian at a fixed point or singularity, split into
/// contracting (`n_minus`), expanding (`n_plus`) and neutral (`n_zero`) parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub kind: SystemKind,
    pub eigenvalues: Vec<Complex>,
    /// `|λ|` for maps, `Re λ` for flows.
    pub magnitudes: Vec<f64>,
    pub n_minus: usize,
    pub n_plus: usize,
    pub n_zero: usize,
    pub eta: f64,
}

impl Spectrum {
    pub fn from_eigenvalues(kind: SystemKind, eigs: &[Complex64], eta: f64) -> Self {
        let magnitudes: Vec<f64> = eigs
            .iter()
            .map(|l| match kind {
                SystemKind::Map => l.norm(),
                SystemKind::Flow => l.re,
            })
            .collect();
        let centre = match kind {
            SystemKind::Map => 1.0,
            SystemKind::Flow => 0.0,
        };
        let (mut n_minus, mut n_plus, mut n_zero) = (0, 0, 0);
        for &m in &magnitudes {
            if (m - centre).abs() <= eta {
                n_zero += 1;
            } else if m < centre {
                n_minus += 1;
            } else {
                n_plus += 1;
            }
        }
        Spectrum {
            kind,
            eigenvalues: eigs.iter().map(|&c| c.into()).collect(),
            magnitudes,
            n_minus,
            n_plus,
            n_zero,
            eta,
        }
    }

    /// Every non-real eigenvalue has its conjugate in the list.
    pub fn is_conjugate_closed(&self) -> bool {
        self.eigenvalues.iter().all(|a| {
            a.im.abs() <= PAIRING_TOL
                || self.eigenvalues.iter().any(|b| {
                    (a.re - b.re).abs() <= PAIRING_TOL && (a.im + b.im).abs() <= PAIRING_TOL
                })
        })
    }

    pub fn verdict(&self) -> Verdict {
        if self.n_zero > 0 {
            Verdict::Nonhyperbolic
        } else if self.n_plus == 0 {
            Verdict::HyperbolicStable
        } else if self.n_minus == 0 {
            Verdict::HyperbolicUnstable
        } else {
            Verdict::HyperbolicSaddle
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HyperbolicStable,
    HyperbolicUnstable,
    HyperbolicSaddle,
    Nonhyperbolic,
    /// Detector did not fire. Not a hyperbolicity certificate.
    NoEvidence,
    /// Too few orbit points for the detector.
    InsufficientData,
    /// The orbit settled away from the declared fixed point.
    FixedPointMismatch,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::HyperbolicStable => "hyperbolic_stable",
            Verdict::HyperbolicUnstable => "hyperbolic_unstable",
            Verdict::HyperbolicSaddle => "hyperbolic_saddle",
            Verdict::Nonhyperbolic => "nonhyperbolic",
            Verdict::NoEvidence => "no_evidence",
            Verdict::InsufficientData => "insufficient_data",
            Verdict::FixedPointMismatch => "fixed_point_mismatch",
        }
    }

    pub fn is_hyperbolic(self) -> bool {
        matches!(
            self,
            Verdict::HyperbolicStable | Verdict::HyperbolicUnstable | Verdict::HyperbolicSaddle
        )
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Verdict::HyperbolicStable,
            Verdict::HyperbolicUnstable,
            Verdict::HyperbolicSaddle,
            Verdict::Nonhyperbolic,
            Verdict::NoEvidence,
            Verdict::InsufficientData,
            Verdict::FixedPointMismatch,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown verdict `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Spectral,
    ProjectiveDimension,
}

/// One coordinate projection as seen by the detector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisDimension {
    pub axis: usize,
    pub value: f64,
    pub r_squared: f64,
    pub degenerate: bool,
    /// `value > θ` and the fit passes the R² gate.
    pub fires: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub system: String,
    pub kind: SystemKind,
    pub point: Vec<f64>,
    pub verdict: Verdict,
    pub evidence: Evidence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Spectrum>,
    /// Moduli of the unit-time map's numerical Jacobian (flows only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_time_moduli: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projective_dimensions: Option<Vec<AxisDimension>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_dimension: Option<f64>,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    fn spectral(system: &str, kind: SystemKind, point: &[f64], spectrum: Spectrum) -> Self {
        ClassificationReport {
            system: system.to_string(),
            kind,
            point: point.to_vec(),
            verdict: spectrum.verdict(),
            evidence: Evidence::Spectral,
            spectrum: Some(spectrum),
            unit_time_moduli: None,
            threshold: None,
            projective_dimensions: None,
            predicted_dimension: None,
            notes: Vec::new(),
        }
    }
}

fn check_point(point: &[f64], arity: usize) -> Result<()> {
    if point.len() != arity {
        return Err(Error::ArityMismatch {
            expected: arity,
            got: point.len(),
        });
    }
    if !point.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("point is not finite".into()));
    }
    Ok(())
}

fn finite(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(m)
    } else {
        Err(Error::InvalidParameter("Jacobian has non-finite entries".into()))
    }
}

/// `DF(point)` from the symbolic derivatives.
pub fn map_jacobian(sys: &MapSystem, point: &[f64]) -> Result<DMatrix<f64>> {
    check_point(point, sys.arity())?;
    finite(sys.jacobian_at(point))
}

/// Jacobian of the vector field at `point`.
pub fn flow_jacobian(flow: &FlowSystem, point: &[f64]) -> Result<DMatrix<f64>> {
    check_point(point, flow.arity())?;
    finite(flow.jacobian_at(point))
}

/// Spectral classification of a map fixed point.
pub fn classify_map_fixed_point(sys: &MapSystem, point: &[f64], eta: f64) -> Result<ClassificationReport> {
    check_eta(eta)?;
    check_point(point, sys.arity())?;
    let residual = distance(&sys.apply(point), point);
    if !(residual <= FIXED_POINT_TOL) {
        return Err(Error::NotFixed { residual });
    }
    let eigs = eigenvalues(&map_jacobian(sys, point)?)?;
    let spectrum = Spectrum::from_eigenvalues(SystemKind::Map, &eigs, eta);
    Ok(ClassificationReport::spectral(sys.name(), SystemKind::Map, point, spectrum))
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance η = {eta} outside (0, 1)")))
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Spectral classification of a flow singularity, cross-checked against the
/// multipliers of the numerically differentiated unit-time map.
pub fn classify_flow_singularity(
    flow: &FlowSystem,
    point: &[f64],
    eta: f64,
) -> Result<ClassificationReport> {
    check_eta(eta)?;
    check_point(point, flow.arity())?;
    let mut v = vec![0.0; flow.arity()];
    flow.rhs(point, &mut v);
    let residual = norm(&v);
    if !(residual <= FIXED_POINT_TOL) {
        return Err(Error::NotFixed { residual });
    }
    let eigs = eigenvalues(&flow_jacobian(flow, point)?)?;
    let spectrum = Spectrum::from_eigenvalues(SystemKind::Flow, &eigs, eta);

    let unit = flow.unit_time_jacobian(point, FD_STEP)?;
    let multipliers = eigenvalues(&unit)?;
    let unit_spec = Spectrum::from_eigenvalues(SystemKind::Map, &multipliers, eta);
    let got = sorted(unit_spec.magnitudes.clone());
    let want = sorted(spectrum.magnitudes.iter().map(|re| re.exp()).collect());
    if let Some((g, w)) = got
        .iter()
        .zip(&want)
        .find(|(g, w)| (*g - *w).abs() > UNIT_TIME_TOL)
    {
        return Err(Error::Inconsistent(format!(
            "unit-time multiplier modulus {g} differs from e^(Re λ) = {w}"
        )));
    }
    if unit_spec.verdict() != spectrum.verdict() {
        return Err(Error::Inconsistent(format!(
            "flow spectrum says {}, unit-time map says {}",
            spectrum.verdict().as_str(),
            unit_spec.verdict().as_str()
        )));
    }
    let mut report = ClassificationReport::spectral(flow.name(), SystemKind::Flow, point, spectrum);
    report.unit_time_moduli = Some(got);
    Ok(report)
}

/// Whether an orbit stopped by the iteration cap is still closing in on its
/// fixed point: closer than at the start and than at 90% of its length.
fn approaching(orbit: &Orbit) -> bool {
    let x0 = orbit.fixed_point();
    let m = orbit.len();
    let d_first = distance(orbit.initial(), x0);
    let d_late = distance(orbit.point(m * 9 / 10), x0);
    let d_last = distance(orbit.last(), x0);
    d_last < d_first && d_last <= d_late
}

fn settled_elsewhere(orbit: &Orbit) -> bool {
    let m = orbit.len();
    if m < 2 {
        return false;
    }
    let step = distance(orbit.last(), orbit.point(m - 2));
    let d = distance(orbit.last(), orbit.fixed_point());
    step <= 1e-12 * (1.0 + d) && d > 1e-6
}

fn axis_dimension(axis: usize, est: &DimensionEstimate, theta: f64) -> AxisDimension {
    AxisDimension {
        axis,
        value: est.value,
        r_squared: est.r_squared,
        degenerate: est.degenerate,
        fires: !est.degenerate && est.value > theta && est.r_squared >= R2_GATE,
        warnings: est.warnings.clone(),
    }
}

/// Projective-dimension detector. Fires (verdict `Nonhyperbolic`) when some
/// coordinate projection of the orbit has estimated dimension above `theta`
/// with an acceptable fit. Otherwise reports `NoEvidence`.
pub fn detect_nonhyperbolic_via_dimension(
    orbit: &Orbit,
    theta: f64,
    cfg: &EstimatorConfig,
) -> Result<ClassificationReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold θ = {theta} outside (0, 1)")));
    }
    let mut report = ClassificationReport {
        system: orbit.source().to_string(),
        kind: SystemKind::Map,
        point: orbit.fixed_point().to_vec(),
        verdict: Verdict::NoEvidence,
        evidence: Evidence::ProjectiveDimension,
        spectrum: None,
        unit_time_moduli: None,
        threshold: Some(theta),
        projective_dimensions: None,
        predicted_dimension: None,
        notes: Vec::new(),
    };
    match orbit.termination() {
        Termination::Converged { .. } | Termination::LandedOnFixedPoint => {}
        Termination::Diverged { .. } => return Err(Error::NonConvergentOrbit),
        Termination::MaxIterations => {
            if settled_elsewhere(orbit) {
                report.verdict = Verdict::FixedPointMismatch;
                report
                    .notes
                    .push("orbit settled away from the declared fixed point".into());
                return Ok(report);
            }
            if !approaching(orbit) {
                return Err(Error::NonConvergentOrbit);
            }
            report
                .notes
                .push("iteration cap reached while still approaching the fixed point".into());
        }
    }
    if orbit.len() < cfg.min_points {
        report.verdict = Verdict::InsufficientData;
        report.notes.push(format!(
            "{} orbit points, at least {} required",
            orbit.len(),
            cfg.min_points
        ));
        return Ok(report);
    }
    let axes: Vec<AxisDimension> = projective_dimensions(orbit, cfg)?
        .iter()
        .enumerate()
        .map(|(k, est)| axis_dimension(k, est, theta))
        .collect();
    if axes.iter().any(|a| a.fires) {
        report.verdict = Verdict::Nonhyperbolic;
    }
    report.projective_dimensions = Some(axes);
    Ok(report)
}
