//! Plain-text system definitions.
//!
//! A definition is a sequence of `[section]` headers followed by
//! `key = value` lines. Blank lines and lines starting with `#` are ignored.
//!
//! ```text
//! [system]
//! name = k2
//! kind = map                # or flow
//! variables = x
//! fixed_point = 0           # optional, defaults to the origin
//!
//! [parameters]              # optional, substituted as constants
//! c = 1
//!
//! [equations]
//! x = x - c*x^2
//!
//! [orbit]                   # repeatable
//! initial = 0.5
//! mode = forward            # inverse | manifold-forward | manifold-inverse
//! max_n = 1000000
//!
//! [manifold]                # needed by the manifold-* modes
//! axis = 0
//! kind = center
//! order = 3
//!
//! [expected]
//! verdict = nonhyperbolic
//! dimension = 0.5
//! tolerance = 0.05
//! k = 2
//! ```
//!
//! Unknown sections and keys are rejected. For flows, `forward` integrates
//! toward a stable singularity and `inverse` runs time backwards from an
//! unstable one.

use crate::classify::Verdict;
use crate::dynsys::{
    generate_flow_orbit, generate_inverse_orbit, generate_orbit, FlowSystem, MapSystem, Orbit,
    OrbitSettings, StabilityHint,
};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::manifolds::{lift_orbit, restrict_to_manifold, solve_invariance, ManifoldKind, RestrictedMap, DEFAULT_ORDER};

pub use crate::classify::SystemKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitMode {
    Forward,
    Inverse,
    /// Forward orbit of the map restricted to the manifold, lifted to the graph.
    ManifoldForward,
    /// Inverse orbit of the restricted map, lifted to the graph.
    ManifoldInverse,
}

impl OrbitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OrbitMode::Forward => "forward",
            OrbitMode::Inverse => "inverse",
            OrbitMode::ManifoldForward => "manifold-forward",
            OrbitMode::ManifoldInverse => "manifold-inverse",
        }
    }
}

impl std::str::FromStr for OrbitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(OrbitMode::Forward),
            "inverse" => Ok(OrbitMode::Inverse),
            "manifold-forward" => Ok(OrbitMode::ManifoldForward),
            "manifold-inverse" => Ok(OrbitMode::ManifoldInverse),
            other => Err(Error::InvalidParameter(format!("unknown orbit mode `{other}`"))),
        }
    }
}

/// A recommended orbit. For the manifold modes `initial` holds the single
/// manifold coordinate measured from the fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSpec {
    pub initial: Vec<f64>,
    pub mode: OrbitMode,
    pub max_n: Option<usize>,
    pub delta_conv: Option<f64>,
}

impl OrbitSpec {
    pub fn settings(&self) -> OrbitSettings {
        let mut s = OrbitSettings::default();
        if let Some(n) = self.max_n {
            s.max_n = n;
        }
        if let Some(d) = self.delta_conv {
            s.delta_conv = d;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldSpec {
    pub axis: usize,
    pub kind: ManifoldKind,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub verdict: Option<Verdict>,
    pub dimension: Option<f64>,
    pub tolerance: f64,
    pub k: Option<usize>,
    pub provenance: String,
}

impl Default for Expected {
    fn default() -> Self {
        Expected {
            verdict: None,
            dimension: None,
            tolerance: 0.05,
            k: None,
            provenance: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDef {
    pub name: String,
    pub kind: SystemKind,
    pub variables: Vec<String>,
    pub fixed_point: Option<Vec<f64>>,
    pub rk4_steps: Option<usize>,
    pub description: String,
    pub provenance: String,
    pub parameters: Vec<(String, f64)>,
    /// Component expressions in variable order.
    pub equations: Vec<String>,
    pub orbits: Vec<OrbitSpec>,
    pub manifold: Option<ManifoldSpec>,
    pub expected: Expected,
}

/// A built map or flow.
#[derive(Debug, Clone)]
pub enum System {
    Map(MapSystem),
    Flow(FlowSystem),
}

impl System {
    pub fn name(&self) -> &str {
        match self {
            System::Map(m) => m.name(),
            System::Flow(f) => f.name(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            System::Map(m) => m.arity(),
            System::Flow(f) => f.arity(),
        }
    }

    /// Fixed point of a map or singularity of a flow.
    pub fn base_point(&self) -> &[f64] {
        match self {
            System::Map(m) => m.fixed_point(),
            System::Flow(f) => f.singularity(),
        }
    }

    pub fn kind(&self) -> SystemKind {
        match self {
            System::Map(_) => SystemKind::Map,
            System::Flow(_) => SystemKind::Flow,
        }
    }
}

fn cfg_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| cfg_err(line, format!("`{key}` expects a finite number, got `{v}`")))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| cfg_err(line, format!("`{key}` expects a non-negative integer, got `{v}`")))
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_f64(line, key, s)).collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    System,
    Parameters,
    Equations,
    Orbit,
    Manifold,
    Expected,
}

#[derive(Default)]
struct ManifoldDraft {
    axis: Option<usize>,
    kind: Option<ManifoldKind>,
    order: Option<usize>,
}

#[derive(Default)]
struct OrbitDraft {
    line: usize,
    initial: Option<Vec<f64>>,
    mode: Option<OrbitMode>,
    max_n: Option<usize>,
    delta_conv: Option<f64>,
}

impl OrbitDraft {
    fn finish(self) -> Result<OrbitSpec> {
        Ok(OrbitSpec {
            initial: self
                .initial
                .ok_or_else(|| cfg_err(self.line, "[orbit] needs `initial`"))?,
            mode: self.mode.unwrap_or(OrbitMode::Forward),
            max_n: self.max_n,
            delta_conv: self.delta_conv,
        })
    }
}

impl SystemDef {
    /// Parses a definition. Expressions are checked by [`SystemDef::build`].
    pub fn parse(text: &str) -> Result<SystemDef> {
        let mut section = Section::None;
        let mut seen: Vec<(&'static str, usize)> = Vec::new();
        let mut name = None;
        let mut kind = None;
        let mut variables: Option<Vec<String>> = None;
        let mut fixed_point = None;
        let mut rk4_steps = None;
        let mut description = String::new();
        let mut provenance = String::new();
        let mut parameters: Vec<(String, f64)> = Vec::new();
        let mut equations: Vec<(usize, String, String)> = Vec::new();
        let mut orbits = Vec::new();
        let mut orbit: Option<OrbitDraft> = None;
        let mut manifold: Option<ManifoldDraft> = None;
        let mut expected = Expected::default();
        let mut keys: Vec<String> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('[') {
                let header = header
                    .strip_suffix(']')
                    .ok_or_else(|| cfg_err(line, "unterminated section header"))?
                    .trim();
                if let Some(o) = orbit.take() {
                    orbits.push(o.finish()?);
                }
                keys.clear();
                section = match header {
                    "system" => Section::System,
                    "parameters" => Section::Parameters,
                    "equations" => Section::Equations,
                    "orbit" => Section::Orbit,
                    "manifold" => Section::Manifold,
                    "expected" => Section::Expected,
                    other => return Err(cfg_err(line, format!("unknown section [{other}]"))),
                };
                let label: &'static str = match section {
                    Section::System => "system",
                    Section::Parameters => "parameters",
                    Section::Equations => "equations",
                    Section::Manifold => "manifold",
                    Section::Expected => "expected",
                    _ => "",
                };
                if !label.is_empty() {
                    if seen.iter().any(|(l, _)| *l == label) {
                        return Err(cfg_err(line, format!("section [{label}] repeated")));
                    }
                    seen.push((label, line));
                }
                match section {
                    Section::Orbit => {
                        orbit = Some(OrbitDraft {
                            line,
                            ..Default::default()
                        })
                    }
                    Section::Manifold => manifold = Some(ManifoldDraft::default()),
                    _ => {}
                }
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| cfg_err(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(cfg_err(line, "empty key"));
            }
            if keys.iter().any(|k| k == key) {
                return Err(cfg_err(line, format!("duplicate key `{key}`")));
            }
            keys.push(key.to_string());
            let unknown = || cfg_err(line, format!("unknown key `{key}`"));
            match section {
                Section::None => return Err(cfg_err(line, "key outside of any section")),
                Section::System => match key {
                    "name" => name = Some(value.to_string()),
                    "kind" => {
                        kind = Some(match value {
                            "map" => SystemKind::Map,
                            "flow" => SystemKind::Flow,
                            other => {
                                return Err(cfg_err(line, format!("kind must be map or flow, got `{other}`")))
                            }
                        })
                    }
                    "variables" => {
                        variables = Some(value.split(',').map(|s| s.trim().to_string()).collect())
                    }
                    "fixed_point" => fixed_point = Some(parse_list(line, key, value)?),
                    "rk4_steps" => rk4_steps = Some(parse_usize(line, key, value)?),
                    "description" => description = value.to_string(),
                    "provenance" => provenance = value.to_string(),
                    _ => return Err(unknown()),
                },
                Section::Parameters => parameters.push((key.to_string(), parse_f64(line, key, value)?)),
                Section::Equations => equations.push((line, key.to_string(), value.to_string())),
                Section::Orbit => {
                    let o = orbit.as_mut().expect("orbit draft open");
                    match key {
                        "initial" => o.initial = Some(parse_list(line, key, value)?),
                        "mode" => o.mode = Some(value.parse().map_err(|e: Error| cfg_err(line, e.to_string()))?),
                        "max_n" => o.max_n = Some(parse_usize(line, key, value)?),
                        "delta" => o.delta_conv = Some(parse_f64(line, key, value)?),
                        _ => return Err(unknown()),
                    }
                }
                Section::Manifold => {
                    let m = manifold.as_mut().expect("manifold draft open");
                    match key {
                        "axis" => m.axis = Some(parse_usize(line, key, value)?),
                        "kind" => m.kind = Some(value.parse().map_err(|e: Error| cfg_err(line, e.to_string()))?),
                        "order" => m.order = Some(parse_usize(line, key, value)?),
                        _ => return Err(unknown()),
                    }
                }
                Section::Expected => match key {
                    "verdict" => {
                        expected.verdict =
                            Some(value.parse().map_err(|e: Error| cfg_err(line, e.to_string()))?)
                    }
                    "dimension" => expected.dimension = Some(parse_f64(line, key, value)?),
                    "tolerance" => expected.tolerance = parse_f64(line, key, value)?,
                    "k" => expected.k = Some(parse_usize(line, key, value)?),
                    "provenance" => expected.provenance = value.to_string(),
                    _ => return Err(unknown()),
                },
            }
        }
        if let Some(o) = orbit.take() {
            orbits.push(o.finish()?);
        }

        let name = name.ok_or_else(|| cfg_err(0, "[system] needs `name`"))?;
        let kind = kind.ok_or_else(|| cfg_err(0, "[system] needs `kind`"))?;
        let variables = variables.ok_or_else(|| cfg_err(0, "[system] needs `variables`"))?;
        let mut ordered = Vec::with_capacity(variables.len());
        for v in &variables {
            let matches: Vec<_> = equations.iter().filter(|(_, k, _)| k == v).collect();
            match matches.as_slice() {
                [(_, _, e)] => ordered.push(e.clone()),
                [] => return Err(cfg_err(0, format!("no equation for variable `{v}`"))),
                _ => unreachable!("duplicate keys rejected above"),
            }
        }
        if let Some((line, k, _)) = equations.iter().find(|(_, k, _)| !variables.contains(k)) {
            return Err(cfg_err(*line, format!("equation for undeclared variable `{k}`")));
        }
        let manifold = manifold
            .map(|m| -> Result<ManifoldSpec> {
                Ok(ManifoldSpec {
                    axis: m.axis.unwrap_or(0),
                    kind: m.kind.ok_or_else(|| cfg_err(0, "[manifold] needs `kind`"))?,
                    order: m.order.unwrap_or(DEFAULT_ORDER),
                })
            })
            .transpose()?;
        Ok(SystemDef {
            name,
            kind,
            variables,
            fixed_point,
            rk4_steps,
            description,
            provenance,
            parameters,
            equations: ordered,
            orbits,
            manifold,
            expected,
        })
    }

    /// Overrides declared parameter values. Undeclared names are rejected.
    pub fn set_parameters(&mut self, overrides: &[(String, f64)]) -> Result<()> {
        for (name, value) in overrides {
            let slot = self
                .parameters
                .iter_mut()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::InvalidParameter(format!("`{name}` is not a parameter of {}", self.name)))?;
            slot.1 = *value;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<System> {
        let vars: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        let params: Vec<(&str, f64)> = self.parameters.iter().map(|(n, v)| (n.as_str(), *v)).collect();
        let comps = self
            .equations
            .iter()
            .map(|e| Expression::parse_with_params(e, &vars, &params))
            .collect::<Result<Vec<_>>>()?;
        match self.kind {
            SystemKind::Map => {
                if self.rk4_steps.is_some() {
                    return Err(Error::InvalidSystem("rk4_steps only applies to flows".into()));
                }
                Ok(System::Map(MapSystem::new(&self.name, comps, self.fixed_point.clone())?))
            }
            SystemKind::Flow => {
                let mut f = FlowSystem::new(&self.name, comps, self.fixed_point.clone())?;
                if let Some(s) = self.rk4_steps {
                    f = f.with_rk4_steps(s)?;
                }
                Ok(System::Flow(f))
            }
        }
    }

    /// Restricted map on the declared manifold.
    pub fn restricted_map(&self, sys: &System) -> Result<RestrictedMap> {
        let spec = self
            .manifold
            .ok_or_else(|| Error::InvalidSystem(format!("{} declares no [manifold]", self.name)))?;
        let map = match sys {
            System::Map(m) => m,
            System::Flow(_) => {
                return Err(Error::InvalidSystem("manifold series are computed for maps".into()))
            }
        };
        let e = solve_invariance(map, spec.axis, spec.kind, spec.order)?;
        restrict_to_manifold(map, &e)
    }

    /// Generates the orbit described by `spec`, with `settings` overriding the
    /// spec's own stopping rules.
    pub fn run_orbit(&self, sys: &System, spec: &OrbitSpec, settings: &OrbitSettings) -> Result<Orbit> {
        match (spec.mode, sys) {
            (OrbitMode::Forward, System::Map(m)) => generate_orbit(m, &spec.initial, settings),
            (OrbitMode::Inverse, System::Map(m)) => generate_inverse_orbit(m, &spec.initial, settings),
            (OrbitMode::Forward, System::Flow(f)) => {
                generate_flow_orbit(f, &spec.initial, settings, StabilityHint::Stable)
            }
            (OrbitMode::Inverse, System::Flow(f)) => {
                generate_flow_orbit(f, &spec.initial, settings, StabilityHint::Unstable)
            }
            (mode, _) => {
                if spec.initial.len() != 1 {
                    return Err(Error::InvalidParameter(
                        "manifold orbits take a single manifold coordinate".into(),
                    ));
                }
                let r = self.restricted_map(sys)?;
                let inner = if mode == OrbitMode::ManifoldForward {
                    generate_orbit(&r.map, &spec.initial, settings)?
                } else {
                    generate_inverse_orbit(&r.map, &spec.initial, settings)?
                };
                lift_orbit(&inner, &r.expansion)
            }
        }
    }

    /// Like [`SystemDef::run_orbit`] for manifold modes, but returns the
    /// orbit of the restricted 1-D map before lifting.
    pub fn run_restricted_orbit(&self, sys: &System, spec: &OrbitSpec, settings: &OrbitSettings) -> Result<Orbit> {
        let r = self.restricted_map(sys)?;
        match spec.mode {
            OrbitMode::ManifoldForward => generate_orbit(&r.map, &spec.initial, settings),
            OrbitMode::ManifoldInverse => generate_inverse_orbit(&r.map, &spec.initial, settings),
            _ => Err(Error::InvalidParameter("orbit is not a manifold orbit".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const K2: &str = "
# parabolic map
[system]
name = k2
kind = map
variables = x

[parameters]
c = 1

[equations]
x = x - c*x^2

[orbit]
initial = 0.5
max_n = 1000

[expected]
verdict = nonhyperbolic
dimension = 0.5
";

    #[test]
    fn parses_and_builds() {
        let def = SystemDef::parse(K2).unwrap();
        assert_eq!(def.name, "k2");
        assert_eq!(def.kind, SystemKind::Map);
        assert_eq!(def.orbits.len(), 1);
        assert_eq!(def.orbits[0].mode, OrbitMode::Forward);
        assert_eq!(def.expected.verdict, Some(Verdict::Nonhyperbolic));
        assert_eq!(def.expected.tolerance, 0.05);
        let sys = def.build().unwrap();
        let o = def.run_orbit(&sys, &def.orbits[0], &def.orbits[0].settings()).unwrap();
        assert_eq!(o.len(), 1000);
        assert_eq!(o.point(1), &[0.25]);
    }

    #[test]
    fn parameter_overrides() {
        let mut def = SystemDef::parse(K2).unwrap();
        def.set_parameters(&[("c".into(), 2.0)]).unwrap();
        let System::Map(m) = def.build().unwrap() else { panic!() };
        assert_eq!(m.apply(&[0.5]), vec![0.0]);
        assert!(def.set_parameters(&[("d".into(), 1.0)]).is_err());
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Config { line, .. } => line,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let bad = K2.replace("max_n = 1000", "max_m = 1000");
        assert_eq!(line_of(SystemDef::parse(&bad).unwrap_err()), 16);
        let bad = K2.replace("[expected]", "[expectations]");
        assert!(SystemDef::parse(&bad).is_err());
        let bad = format!("{K2}\n[system]\nname = again\n");
        assert!(SystemDef::parse(&bad).is_err());
        assert!(SystemDef::parse("name = x").is_err());
    }

    #[test]
    fn equations_must_match_variables() {
        let bad = K2.replace("x = x - c*x^2", "y = x");
        assert!(SystemDef::parse(&bad).is_err());
        let bad = K2.replace("variables = x", "variables = x, y");
        assert!(SystemDef::parse(&bad).is_err());
    }

    #[test]
    fn expression_errors_surface_at_build() {
        let bad = K2.replace("x - c*x^2", "x - q*x^2");
        let def = SystemDef::parse(&bad).unwrap();
        assert!(matches!(def.build(), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn repeated_orbit_sections() {
        let text = format!("{K2}\n[orbit]\ninitial = 0.25\nmode = inverse\nmax_n = 10\n");
        let def = SystemDef::parse(&text).unwrap();
        assert_eq!(def.orbits.len(), 2);
        assert_eq!(def.orbits[1].mode, OrbitMode::Inverse);
    }

    #[test]
    fn manifold_orbit_is_lifted() {
        let text = "
[system]
name = c2d
kind = map
variables = x, y
[equations]
x = x - x^3 + x*y
y = 0.5*y + x^2
[orbit]
initial = 0.1
mode = manifold-inverse
max_n = 200
[manifold]
kind = center
";
        let def = SystemDef::parse(text).unwrap();
        let sys = def.build().unwrap();
        let o = def.run_orbit(&sys, &def.orbits[0], &def.orbits[0].settings()).unwrap();
        assert_eq!(o.dim(), 2);
        assert_eq!(o.len(), 200);
        let inner = def
            .run_restricted_orbit(&sys, &def.orbits[0], &def.orbits[0].settings())
            .unwrap();
        assert_eq!(inner.dim(), 1);
        assert_eq!(inner.coordinate(0), o.coordinate(0));
    }
}
