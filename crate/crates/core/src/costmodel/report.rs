use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentCost {
    pub component: String,
    pub energy_pj: f64,
    pub latency_ns: f64,
    pub area_mm2: f64,
}

impl ComponentCost {
    pub fn new(component: &str, energy_pj: f64, latency_ns: f64, area_mm2: f64) -> Self {
        Self {
            component: component.to_string(),
            energy_pj,
            latency_ns,
            area_mm2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Totals {
    pub energy_pj: f64,
    pub latency_ns: f64,
    pub area_mm2: f64,
    pub latency_area: f64,
    pub edap: f64,
}

impl Totals {
    fn from_parts<'a>(parts: impl IntoIterator<Item = &'a ComponentCost>) -> Self {
        let (e, l, a) = parts.into_iter().fold((0.0, 0.0, 0.0), |(e, l, a), c| {
            (e + c.energy_pj, l + c.latency_ns, a + c.area_mm2)
        });
        let d = derived_metrics(e, l, a);
        Totals {
            energy_pj: e,
            latency_ns: l,
            area_mm2: a,
            latency_area: d.latency_area,
            edap: d.edap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedMetrics {
    pub latency_area: f64,
    pub edap: f64,
}

pub fn derived_metrics(energy_pj: f64, latency_ns: f64, area_mm2: f64) -> DerivedMetrics {
    DerivedMetrics {
        latency_area: latency_ns * area_mm2,
        edap: energy_pj * latency_ns * area_mm2,
    }
}

/// Divide every value by `reference`.
pub fn normalize(values: &[f64], reference: f64, metric: &'static str) -> Result<Vec<f64>> {
    if reference == 0.0 {
        return Err(Error::ZeroReference(metric));
    }
    Ok(values.iter().map(|v| v / reference).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerReport {
    pub name: String,
    pub components: Vec<ComponentCost>,
    /// Fraction of comparator outputs that were zero.
    pub sparsity: f64,
    /// Sparsity lies beyond the measured calibration point of the gating
    /// model.
    pub extrapolated: bool,
    pub overflows: u64,
    pub movement_events: u64,
    pub crossbars: u64,
}

impl LayerReport {
    pub fn totals(&self) -> Totals {
        Totals::from_parts(&self.components)
    }

    pub fn component(&self, name: &str) -> Option<&ComponentCost> {
        self.components.iter().find(|c| c.component == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub workload: String,
    pub mode: String,
    pub technology: String,
    /// Cost entries used that are placeholders rather than published values.
    pub user_supplied: Vec<String>,
    pub layers: Vec<LayerReport>,
}

/// One row of the per-run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CsvRow {
    pub layer: String,
    pub component: String,
    pub energy_pj: f64,
    pub latency_ns: f64,
    pub area_mm2: f64,
}

pub const TOTAL_LABEL: &str = "TOTAL";

impl RunReport {
    pub fn empty(workload: &str, mode: &str, technology: &str) -> Self {
        Self {
            workload: workload.into(),
            mode: mode.into(),
            technology: technology.into(),
            user_supplied: Vec::new(),
            layers: Vec::new(),
        }
    }

    pub fn totals(&self) -> Totals {
        Totals::from_parts(self.layers.iter().flat_map(|l| &l.components))
    }

    /// Energy, latency and area summed per component name across layers.
    pub fn component_totals(&self) -> Vec<ComponentCost> {
        let mut out: Vec<ComponentCost> = Vec::new();
        for c in self.layers.iter().flat_map(|l| &l.components) {
            match out.iter_mut().find(|o| o.component == c.component) {
                Some(o) => {
                    o.energy_pj += c.energy_pj;
                    o.latency_ns += c.latency_ns;
                    o.area_mm2 += c.area_mm2;
                }
                None => out.push(c.clone()),
            }
        }
        out
    }

    pub fn movement_events(&self) -> u64 {
        self.layers.iter().map(|l| l.movement_events).sum()
    }

    pub fn overflows(&self) -> u64 {
        self.layers.iter().map(|l| l.overflows).sum()
    }

    /// Sparsity averaged over layers that contain crossbars.
    pub fn mean_sparsity(&self) -> f64 {
        let mapped: Vec<f64> = self.layers.iter().filter(|l| l.crossbars > 0).map(|l| l.sparsity).collect();
        if mapped.is_empty() {
            0.0
        } else {
            mapped.iter().sum::<f64>() / mapped.len() as f64
        }
    }

    pub fn component_energy(&self, name: &str) -> f64 {
        self.layers
            .iter()
            .filter_map(|l| l.component(name))
            .map(|c| c.energy_pj)
            .sum()
    }

    /// Breakdown rows followed by one `TOTAL` row.
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut rows: Vec<CsvRow> = self
            .layers
            .iter()
            .flat_map(|l| {
                l.components.iter().map(move |c| CsvRow {
                    layer: l.name.clone(),
                    component: c.component.clone(),
                    energy_pj: c.energy_pj,
                    latency_ns: c.latency_ns,
                    area_mm2: c.area_mm2,
                })
            })
            .collect();
        let t = self.totals();
        rows.push(CsvRow {
            layer: TOTAL_LABEL.into(),
            component: "all".into(),
            energy_pj: t.energy_pj,
            latency_ns: t.latency_ns,
            area_mm2: t.area_mm2,
        });
        rows
    }

    /// Structured-text summary of the run.
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            workload: &'a str,
            mode: &'a str,
            technology: &'a str,
            user_supplied: &'a [String],
            totals: Totals,
            mean_sparsity: f64,
            overflows: u64,
            movement_events: u64,
            components: Vec<ComponentCost>,
        }
        toml::to_string(&Summary {
            workload: &self.workload,
            mode: &self.mode,
            technology: &self.technology,
            user_supplied: &self.user_supplied,
            totals: self.totals(),
            mean_sparsity: self.mean_sparsity(),
            overflows: self.overflows(),
            movement_events: self.movement_events(),
            components: self.component_totals(),
        })
        .expect("report summary serializes")
    }
}

/// Recompute totals from breakdown rows and compare with the `TOTAL` row.
/// Returns a description of the first disagreement.
pub fn check_csv_totals(rows: &[CsvRow], rel_tol: f64) -> std::result::Result<(), String> {
    let (total, parts): (Vec<&CsvRow>, Vec<&CsvRow>) = rows.iter().partition(|r| r.layer == TOTAL_LABEL);
    let [total] = total.as_slice() else {
        return Err(format!("expected one {TOTAL_LABEL} row, found {}", total.len()));
    };
    let sum = |f: fn(&CsvRow) -> f64| parts.iter().map(|r| f(r)).sum::<f64>();
    for (name, got, want) in [
        ("energy_pj", total.energy_pj, sum(|r| r.energy_pj)),
        ("latency_ns", total.latency_ns, sum(|r| r.latency_ns)),
        ("area_mm2", total.area_mm2, sum(|r| r.area_mm2)),
    ] {
        if (got - want).abs() > rel_tol * want.abs().max(1e-12) {
            return Err(format!("{name}: TOTAL {got} but breakdown sums to {want}"));
        }
    }
    Ok(())
}
