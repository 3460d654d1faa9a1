use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const BUILTIN: &str = include_str!("../../data/costs.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    pub name: String,
    pub energy_pj: f64,
    pub latency_ns: f64,
    pub area_mm2: f64,
    /// Placeholder value that reports should flag.
    #[serde(default)]
    pub user_supplied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostFile {
    technology: String,
    #[serde(default = "default_nongateable")]
    nongateable_fraction: f64,
    #[serde(default)]
    entry: Vec<CostEntry>,
}

fn default_nongateable() -> f64 {
    0.52
}

/// Named component costs, immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    technology: String,
    nongateable_fraction: f64,
    entries: BTreeMap<String, CostEntry>,
}

impl CostTable {
    /// The bundled default table.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN, "built-in cost table").expect("bundled cost table is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read cost table {}: {e}", path.display())))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn from_toml_str(text: &str, source_name: &str) -> Result<Self> {
        let file: CostFile = toml::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            message: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&file.nongateable_fraction) {
            return Err(Error::InvalidCostTable(format!(
                "nongateable_fraction {} outside [0, 1]",
                file.nongateable_fraction
            )));
        }
        let mut entries = BTreeMap::new();
        for e in file.entry {
            for (field, v) in [("energy_pj", e.energy_pj), ("latency_ns", e.latency_ns), ("area_mm2", e.area_mm2)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidCostTable(format!("entry `{}`: {field} = {v}", e.name)));
                }
            }
            if entries.contains_key(&e.name) {
                return Err(Error::InvalidCostTable(format!("duplicate entry `{}`", e.name)));
            }
            entries.insert(e.name.clone(), e);
        }
        Ok(Self {
            technology: file.technology,
            nongateable_fraction: file.nongateable_fraction,
            entries,
        })
    }

    pub fn technology(&self) -> &str {
        &self.technology
    }

    pub fn nongateable_fraction(&self) -> f64 {
        self.nongateable_fraction
    }

    pub fn get(&self, name: &str) -> Result<&CostEntry> {
        self.entries.get(name).ok_or_else(|| Error::UnknownCostEntry(name.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = &CostEntry> {
        self.entries.values()
    }

    /// Return a copy with one entry added or replaced.
    pub fn with_entry(mut self, entry: CostEntry) -> Self {
        self.entries.insert(entry.name.clone(), entry);
        self
    }
}

/// Cost-table entry used for an ADC of the given resolution.
pub fn adc_entry_name(bits: u32) -> String {
    match bits {
        7 => "sar7".into(),
        6 => "sar6".into(),
        4 => "flash4".into(),
        b => format!("adc{b}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let t = CostTable::builtin();
        assert_eq!(t.technology(), "65nm");
        let sar7 = t.get("sar7").unwrap();
        assert_eq!((sar7.energy_pj, sar7.latency_ns, sar7.area_mm2), (4.1, 1.52, 0.004));
        let b = t.get("dcim_B").unwrap();
        assert_eq!((b.energy_pj, b.latency_ns, b.area_mm2), (0.22, 0.1, 0.005));
        assert!(t.get("comparator").unwrap().user_supplied);
        assert!(!t.get("flash4").unwrap().user_supplied);
        assert_eq!(t.nongateable_fraction(), 0.52);
    }

    #[test]
    fn unknown_entry_is_named() {
        let err = CostTable::builtin().get("adc5").unwrap_err();
        assert!(err.to_string().contains("adc5"));
        assert_eq!(adc_entry_name(5), "adc5");
    }

    #[test]
    fn rejects_negative_and_duplicates() {
        let neg = "technology = \"x\"\n[[entry]]\nname = \"a\"\nenergy_pj = -1.0\nlatency_ns = 0.0\narea_mm2 = 0.0\n";
        assert!(matches!(CostTable::from_toml_str(neg, "t"), Err(Error::InvalidCostTable(_))));
        let dup = "technology = \"x\"\n[[entry]]\nname = \"a\"\nenergy_pj = 1.0\nlatency_ns = 0.0\narea_mm2 = 0.0\n\
                   [[entry]]\nname = \"a\"\nenergy_pj = 1.0\nlatency_ns = 0.0\narea_mm2 = 0.0\n";
        assert!(CostTable::from_toml_str(dup, "t").is_err());
    }

    #[test]
    fn parse_error_has_line() {
        let bad = "technology = \"x\"\n[[entry]]\nname = \"a\"\nenergy_pj = oops\n";
        let msg = CostTable::from_toml_str(bad, "bad.toml").unwrap_err().to_string();
        assert!(msg.contains("bad.toml"));
        assert!(msg.contains("line 4"), "{msg}");
    }
}
