use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use orbitdim::boxdim::{
    estimate_dimension, estimate_with, projective_dimensions, tail_exponent_dimension,
    DimensionEstimate, EstimatorConfig, MeasureMethod,
};
use orbitdim::classify::{
    classify_flow_singularity, classify_map_fixed_point, detect_nonhyperbolic_via_dimension,
    ClassificationReport, Verdict,
};
use orbitdim::config::{OrbitSpec, System, SystemDef, SystemKind};
use orbitdim::dynsys::{Orbit, Termination};
use orbitdim::manifolds::{flow_order, nondegeneracy_order, ManifoldExpansion, Nondegeneracy};
use orbitdim::syslib;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::{closed_forms, CatalogArgs, ClassifyArgs, DimArgs, ManifoldArgs, OrbitArgs, OrbitOpts, SourceArgs};

fn parse_overrides(items: &[String]) -> Result<Vec<(String, f64)>> {
    items
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| orbitdim::Error::InvalidParameter(format!("--set expects name=value, got `{item}`")))?;
            let value: f64 = v.trim().parse().map_err(|_| {
                orbitdim::Error::InvalidParameter(format!("--set {k}: `{v}` is not a number"))
            })?;
            Ok((k.trim().to_string(), value))
        })
        .collect()
}

pub fn load_def(source: &SourceArgs) -> Result<SystemDef> {
    let mut def = match (&source.system, &source.config) {
        (Some(name), None) => syslib::get_entry(name)?.def.clone(),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            SystemDef::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        _ => bail!("exactly one of --system and --config is required"),
    };
    def.set_parameters(&parse_overrides(&source.set)?)?;
    Ok(def)
}

fn orbit_spec(def: &SystemDef, opts: &OrbitOpts) -> Result<OrbitSpec> {
    let mut spec = match def.orbits.get(opts.orbit) {
        Some(s) => s.clone(),
        None if opts.x0.is_some() && opts.orbit == 0 => OrbitSpec {
            initial: Vec::new(),
            mode: orbitdim::config::OrbitMode::Forward,
            max_n: None,
            delta_conv: None,
        },
        None => {
            return Err(orbitdim::Error::InvalidParameter(format!(
                "{} has {} designated orbit(s); --orbit {} is out of range",
                def.name,
                def.orbits.len(),
                opts.orbit
            ))
            .into())
        }
    };
    if let Some(x0) = &opts.x0 {
        spec.initial = x0.clone();
    }
    if let Some(n) = opts.max_n {
        spec.max_n = Some(n);
    }
    if let Some(d) = opts.delta {
        spec.delta_conv = Some(d);
    }
    Ok(spec)
}

fn run_orbit(def: &SystemDef, sys: &System, opts: &OrbitOpts) -> Result<(OrbitSpec, Orbit)> {
    let spec = orbit_spec(def, opts)?;
    let orbit = def.run_orbit(sys, &spec, &spec.settings())?;
    Ok((spec, orbit))
}

fn estimator(samples: usize) -> Result<EstimatorConfig> {
    if samples < 32 {
        return Err(orbitdim::Error::InvalidParameter("--eps-samples must be at least 32".into()).into());
    }
    Ok(EstimatorConfig::with_samples(samples))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct AxisSummary {
    axis: usize,
    value: f64,
    r_squared: f64,
}

#[derive(Serialize)]
struct DimReport {
    system: String,
    kind: SystemKind,
    mode: &'static str,
    initial_point: Vec<f64>,
    fixed_point: Vec<f64>,
    orbit_length: usize,
    termination: Termination,
    /// The primary estimate first.
    estimates: Vec<DimensionEstimate>,
    projective_dimensions: Vec<AxisSummary>,
    warnings: Vec<String>,
}

pub fn dim(a: DimArgs) -> Result<()> {
    let def = load_def(&a.source)?;
    let sys = def.build()?;
    let cfg = estimator(a.eps_samples)?;
    let (spec, orbit) = run_orbit(&def, &sys, &a.orbit)?;
    let primary = estimate_dimension(&orbit, &cfg)?;
    let mut warnings = Vec::new();
    let mut estimates = vec![primary.clone()];
    if orbit.dim() == 1 {
        estimates.push(estimate_with(&orbit, MeasureMethod::Grid, &cfg)?);
        match tail_exponent_dimension(&orbit, &cfg) {
            Ok(t) => estimates.push(t),
            Err(e) => warnings.push(format!("tail exponent unavailable: {e}")),
        }
    }
    let projective = projective_dimensions(&orbit, &cfg)?
        .iter()
        .enumerate()
        .map(|(axis, e)| AxisSummary {
            axis,
            value: e.value,
            r_squared: e.r_squared,
        })
        .collect();
    if let Some(path) = &a.csv {
        let mut csv = String::from("epsilon,measure,method\n");
        for m in &primary.measurements {
            csv.push_str(&format!("{},{},{}\n", m.epsilon, m.measure, m.method.as_str()));
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    let report = DimReport {
        system: def.name.clone(),
        kind: def.kind,
        mode: spec.mode.as_str(),
        initial_point: spec.initial.clone(),
        fixed_point: orbit.fixed_point().to_vec(),
        orbit_length: orbit.len(),
        termination: orbit.termination(),
        estimates,
        projective_dimensions: projective,
        warnings,
    };
    emit(&report, a.output.out.as_deref())
}

/// `1 - 1/k` prediction when the system is nonhyperbolic and reducible to one
/// dimension.
fn predicted(def: &SystemDef, sys: &System) -> std::result::Result<Nondegeneracy, String> {
    let r = match sys {
        System::Map(_) if def.manifold.is_some() => def.restricted_map(sys).and_then(|r| r.nondegeneracy()),
        System::Map(m) if m.arity() == 1 => nondegeneracy_order(m),
        System::Flow(f) if f.arity() == 1 => flow_order(f),
        _ => return Err("no one-dimensional reduction declared".into()),
    };
    r.map_err(|e| e.to_string())
}

fn attach_prediction(report: &mut ClassificationReport, def: &SystemDef, sys: &System) {
    match predicted(def, sys) {
        Ok(nd) => {
            report.predicted_dimension = Some(nd.predicted_dimension);
            let mut note = format!("nondegeneracy order k = {}", nd.k);
            if nd.second_iterate {
                note.push_str(" (multiplier -1, read from the second iterate)");
            }
            report.notes.push(note);
        }
        Err(e) => report.notes.push(format!("no dimension prediction: {e}")),
    }
}

pub fn classify(a: ClassifyArgs) -> Result<()> {
    let def = load_def(&a.source)?;
    let sys = def.build()?;
    let mut spectral = match &sys {
        System::Map(m) => classify_map_fixed_point(m, m.fixed_point(), a.eta)?,
        System::Flow(f) => classify_flow_singularity(f, f.singularity(), a.eta)?,
    };
    if spectral.verdict == Verdict::Nonhyperbolic {
        attach_prediction(&mut spectral, &def, &sys);
    }
    if !a.fractal {
        return emit(&spectral, a.output.out.as_deref());
    }
    let cfg = estimator(a.eps_samples)?;
    let (_, orbit) = run_orbit(&def, &sys, &a.orbit)?;
    let mut report = detect_nonhyperbolic_via_dimension(&orbit, a.theta, &cfg)?;
    report.system = def.name.clone();
    report.kind = sys.kind();
    report.predicted_dimension = spectral.predicted_dimension;
    report
        .notes
        .push(format!("spectral verdict: {}", spectral.verdict.as_str()));
    report.spectrum = spectral.spectrum;
    report.unit_time_moduli = spectral.unit_time_moduli;
    emit(&report, a.output.out.as_deref())
}

#[derive(Serialize)]
struct RestrictedSummary {
    coefficients: Vec<f64>,
    expression: String,
}

#[derive(Serialize)]
struct ManifoldReport {
    system: String,
    parameters: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expansion: Option<ManifoldExpansion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    restricted_map: Option<RestrictedSummary>,
    nondegeneracy: Option<Nondegeneracy>,
    notes: Vec<String>,
}

pub fn manifold(a: ManifoldArgs) -> Result<()> {
    let mut def = load_def(&a.source)?;
    if let Some(n) = a.draws {
        let order = a.order.unwrap_or(orbitdim::expr::MAX_TAYLOR_ORDER);
        let report = closed_forms::check_draws(&def, n, a.seed, order)?;
        return emit(&report, a.output.out.as_deref());
    }
    if let (Some(order), Some(spec)) = (a.order, def.manifold.as_mut()) {
        spec.order = order;
    }
    let sys = def.build()?;
    let parameters = def
        .parameters
        .iter()
        .map(|(k, v)| (k.clone(), Value::from(*v)))
        .collect();
    let mut report = ManifoldReport {
        system: def.name.clone(),
        parameters,
        expansion: None,
        restricted_map: None,
        nondegeneracy: None,
        notes: Vec::new(),
    };
    let outcome = if def.manifold.is_some() {
        let r = def.restricted_map(&sys)?;
        report.restricted_map = Some(RestrictedSummary {
            coefficients: r.coefficients.clone(),
            expression: r.map.components()[0].to_string(),
        });
        report.expansion = Some(r.expansion.clone());
        r.nondegeneracy()
    } else {
        match &sys {
            System::Map(m) if m.arity() == 1 => nondegeneracy_order(m),
            System::Flow(f) if f.arity() == 1 => flow_order(f),
            _ => {
                return Err(orbitdim::Error::InvalidSystem(format!(
                    "{} declares no [manifold] section",
                    def.name
                ))
                .into())
            }
        }
    };
    match outcome {
        Ok(nd) => {
            if nd.second_iterate {
                report
                    .notes
                    .push("multiplier -1: k read from the second iterate".into());
            }
            report.nondegeneracy = Some(nd);
        }
        Err(orbitdim::Error::HyperbolicRestriction(m)) => report.notes.push(format!(
            "restricted map is hyperbolic (|G'(0)| = {m}); orbits on the manifold have dimension 0"
        )),
        Err(e) => return Err(e.into()),
    }
    emit(&report, a.output.out.as_deref())
}

pub fn orbit(a: OrbitArgs) -> Result<()> {
    let def = load_def(&a.source)?;
    let sys = def.build()?;
    let (_, orbit) = run_orbit(&def, &sys, &a.orbit)?;
    let mut csv = String::from("n");
    for v in &def.variables {
        csv.push(',');
        csv.push_str(v);
    }
    csv.push('\n');
    for (i, p) in orbit.points().enumerate() {
        csv.push_str(&(i + 1).to_string());
        for v in p {
            csv.push(',');
            csv.push_str(&v.to_string());
        }
        csv.push('\n');
    }
    match &a.out {
        Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    eprintln!(
        "{} points, termination: {}",
        orbit.len(),
        serde_json::to_string(&orbit.termination())?
    );
    Ok(())
}

#[derive(Serialize)]
struct CatalogRow<'a> {
    name: &'a str,
    kind: SystemKind,
    variables: &'a [String],
    equations: &'a [String],
    description: &'a str,
    expected_verdict: Option<&'static str>,
    expected_dimension: Option<f64>,
    tolerance: f64,
    k: Option<usize>,
}

pub fn catalog(a: CatalogArgs) -> Result<()> {
    if let Some(name) = &a.show {
        print!("{}", syslib::get_entry(name)?.source);
        return Ok(());
    }
    let rows: Vec<CatalogRow> = syslib::list()
        .iter()
        .map(|e| CatalogRow {
            name: &e.def.name,
            kind: e.def.kind,
            variables: &e.def.variables,
            equations: &e.def.equations,
            description: &e.def.description,
            expected_verdict: e.def.expected.verdict.map(|v| v.as_str()),
            expected_dimension: e.def.expected.dimension,
            tolerance: e.def.expected.tolerance,
            k: e.def.expected.k,
        })
        .collect();
    emit(&rows, None)
}
