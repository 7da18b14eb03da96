//! Built-in catalog of reference systems with their expected verdicts and
//! dimensions. Entries are stored in the same text format as user systems.

use std::sync::OnceLock;

use crate::config::{System, SystemDef};
use crate::dynsys::Orbit;
use crate::error::{Error, Result};

macro_rules! catalog_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../catalog/", $name, ".sys")))),*]
    };
}

static SOURCES: &[(&str, &str)] = catalog_files!(
    "node-ex1",
    "focus-ex1",
    "saddle-fig2",
    "k2",
    "k3",
    "k4",
    "k5",
    "flip-k3",
    "saddle-ex2-template",
    "center-2d",
    "flow-linear",
    "flow-m2",
    "flow-m3",
    "flow-ks2",
);

/// A parsed catalog entry.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub def: SystemDef,
    /// The definition in its text form.
    pub source: &'static str,
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn system(&self) -> Result<System> {
        self.def.build()
    }

    /// All recommended orbits, with their own stopping rules.
    pub fn designated_orbits(&self) -> Result<Vec<Orbit>> {
        let sys = self.system()?;
        self.def
            .orbits
            .iter()
            .map(|spec| self.def.run_orbit(&sys, spec, &spec.settings()))
            .collect()
    }
}

fn entries() -> &'static [CatalogEntry] {
    static ENTRIES: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    ENTRIES.get_or_init(|| {
        SOURCES
            .iter()
            .map(|(file, text)| {
                let def = SystemDef::parse(text)
                    .unwrap_or_else(|e| panic!("catalog file {file}.sys: {e}"));
                assert_eq!(def.name, *file, "catalog file name and entry name differ");
                CatalogEntry { def, source: text }
            })
            .collect()
    })
}

/// Looks up an entry by name.
pub fn get_entry(name: &str) -> Result<&'static CatalogEntry> {
    entries()
        .iter()
        .find(|e| e.def.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

/// All entries in catalog order.
pub fn list() -> &'static [CatalogEntry] {
    entries()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Verdict;
    use crate::config::SystemKind;

    #[test]
    fn every_entry_builds() {
        for e in list() {
            let sys = e.system().unwrap_or_else(|err| panic!("{}: {err}", e.name()));
            assert_eq!(sys.arity(), e.def.variables.len());
            assert!(!e.def.orbits.is_empty(), "{} has no orbit", e.name());
            assert!(e.def.expected.verdict.is_some());
            assert!(!e.def.expected.provenance.is_empty());
        }
    }

    #[test]
    fn mandatory_entries() {
        for name in [
            "node-ex1",
            "focus-ex1",
            "saddle-fig2",
            "k2",
            "k3",
            "k4",
            "k5",
            "saddle-ex2-template",
            "center-2d",
            "flow-m2",
            "flow-m3",
            "flow-ks2",
        ] {
            get_entry(name).unwrap();
        }
        assert!(matches!(get_entry("nope"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn node_entry() {
        let e = get_entry("node-ex1").unwrap();
        assert_eq!(e.def.kind, SystemKind::Map);
        assert_eq!(e.def.expected.verdict, Some(Verdict::HyperbolicStable));
        assert_eq!(e.def.expected.dimension, Some(0.0));
        let System::Map(m) = e.system().unwrap() else { panic!() };
        assert_eq!(m.apply(&[1.0, 1.0]), vec![0.8, 0.7]);
    }

    #[test]
    fn hyperbolic_designated_orbits_are_long_enough() {
        for name in ["node-ex1", "focus-ex1", "saddle-fig2", "flow-linear"] {
            for o in get_entry(name).unwrap().designated_orbits().unwrap() {
                assert!(o.len() >= 100, "{name}: {} points", o.len());
            }
        }
    }
}
