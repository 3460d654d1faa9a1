//! Analytical cost estimate of a workload under one hardware mode.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::functional::{random_inputs, random_weights};
use super::layer::{LayerSpec, Workload};
use super::plan::{plan, TilePlan};
use crate::costmodel::{
    adc_baseline_cost, adc_entry_name, analytic_counters, dcim_energy, ComponentCost, CostTable, DcimEnergyParams,
    LayerReport, RunReport,
};
use crate::dcim::{timing_model, TimingParams};
use crate::quantkit::{calibrate_alpha, quantize_partial_sum, PsqMode, QuantScheme, DEFAULT_ZERO_FRACTION};
use crate::xbar::{column_sums, slice_weights, stream_input};
use crate::{Error, Result};

/// Highest sparsity at which the gating model has a published anchor.
const GATING_ANCHOR: f64 = 0.5;

/// Cells of the crossbar the `crossbar_mvm` area entry is quoted for.
const REFERENCE_CELLS: f64 = 128.0 * 128.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HardwareMode {
    HcimTernary,
    HcimBinary,
    /// ADC baseline of the given resolution.
    Adc { bits: u32 },
}

impl HardwareMode {
    pub fn name(&self) -> String {
        match self {
            HardwareMode::HcimTernary => "hcim_ternary".into(),
            HardwareMode::HcimBinary => "hcim_binary".into(),
            HardwareMode::Adc { bits } => format!("adc{bits}"),
        }
    }

    pub fn is_hcim(&self) -> bool {
        !matches!(self, HardwareMode::Adc { .. })
    }
}

impl std::fmt::Display for HardwareMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for HardwareMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hcim_ternary" => Ok(HardwareMode::HcimTernary),
            "hcim_binary" => Ok(HardwareMode::HcimBinary),
            _ => s
                .strip_prefix("adc")
                .and_then(|b| b.parse::<u32>().ok())
                .filter(|b| (1..=16).contains(b))
                .map(|bits| HardwareMode::Adc { bits })
                .ok_or_else(|| {
                    Error::Config(format!(
                        "unknown mode `{s}` (expected hcim_ternary, hcim_binary or adc<bits>)"
                    ))
                }),
        }
    }
}

/// How an ADC table entry is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdcAccounting {
    /// The entry covers one column over all input bit streams.
    PerColumn,
    /// The entry is one conversion; every column converts once per step.
    PerConversion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardwareConfig {
    pub xbar_rows: usize,
    pub xbar_cols: usize,
    /// Cost-table entry of the digital CiM array.
    pub dcim_entry: String,
    pub timing: TimingParams,
    pub adc_sharing: u64,
    pub adc_accounting: AdcAccounting,
    /// Width of a partial sum moved between crossbars.
    pub ps_bytes: u64,
}

impl HardwareConfig {
    /// 128x128 crossbars with a 24x128 digital array.
    pub fn config_a() -> Self {
        Self {
            xbar_rows: 128,
            xbar_cols: 128,
            dcim_entry: "dcim_A".into(),
            timing: TimingParams::default(),
            adc_sharing: 1,
            adc_accounting: AdcAccounting::PerColumn,
            ps_bytes: 4,
        }
    }

    /// 64x64 crossbars with a 24x64 digital array.
    pub fn config_b() -> Self {
        Self {
            xbar_rows: 64,
            xbar_cols: 64,
            dcim_entry: "dcim_B".into(),
            ..Self::config_a()
        }
    }

    pub fn for_crossbar(size: usize) -> Result<Self> {
        match size {
            128 => Ok(Self::config_a()),
            64 => Ok(Self::config_b()),
            other => Err(Error::Config(format!("no preset for a {other}x{other} crossbar (use 128 or 64)"))),
        }
    }

    pub fn label(&self) -> &str {
        self.dcim_entry.strip_prefix("dcim_").unwrap_or(&self.dcim_entry)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SparsitySource {
    /// Sample random weights and inputs per layer, calibrate the ternary
    /// threshold on them, and count zero codes.
    Measured { seed: u64, samples: usize },
    Injected(f64),
}

fn layer_seed(seed: u64, layer: usize) -> u64 {
    seed ^ (layer as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Tiles sampled per layer when measuring sparsity.
const SAMPLED_TILES: usize = 4;

/// Zero-code fraction of one layer on random data at the given crossbar size.
pub fn measure_layer_sparsity(
    layer: &LayerSpec,
    index: usize,
    scheme: &QuantScheme,
    hw: &HardwareConfig,
    seed: u64,
    samples: usize,
) -> Result<f64> {
    if !layer.is_mapped() || scheme.mode == PsqMode::Binary || samples == 0 {
        return Ok(0.0);
    }
    let p = plan(layer, scheme, hw.xbar_rows, hw.xbar_cols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(layer_seed(seed, index));
    let stride = p.tiles.len().div_ceil(SAMPLED_TILES).max(1);
    let mut sums = Vec::new();
    for t in p.tiles.iter().step_by(stride) {
        let weights = random_weights(&mut rng, t.rows, t.logical_cols, scheme);
        let grid = slice_weights(&weights, scheme, hw.xbar_rows, hw.xbar_cols)?;
        let tile = grid.tile(0, 0);
        for _ in 0..samples {
            let plan = stream_input(&random_inputs(&mut rng, t.rows, scheme), scheme)?;
            for digits in &plan.digits {
                sums.extend_from_slice(&column_sums(tile, digits)?[..t.physical_columns]);
            }
        }
    }
    let alpha = calibrate_alpha(&sums, DEFAULT_ZERO_FRACTION)?;
    let s = scheme.with_alpha(alpha);
    let zeros = sums.iter().filter(|&&v| quantize_partial_sum(v, &s).is_zero()).count();
    Ok(zeros as f64 / sums.len() as f64)
}

/// Per-layer sparsity for a mode; binary comparators never emit zero.
pub fn layer_sparsities(
    workload: &Workload,
    scheme: &QuantScheme,
    mode: HardwareMode,
    hw: &HardwareConfig,
    source: &SparsitySource,
) -> Result<Vec<f64>> {
    workload
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| match (mode, source) {
            (HardwareMode::HcimTernary, SparsitySource::Injected(f)) if l.is_mapped() => {
                if (0.0..=1.0).contains(f) {
                    Ok(*f)
                } else {
                    Err(Error::Config(format!("sparsity {f} outside [0, 1]")))
                }
            }
            (HardwareMode::HcimTernary, SparsitySource::Measured { seed, samples }) => {
                measure_layer_sparsity(l, i, &scheme.with_mode(PsqMode::Ternary), hw, *seed, *samples)
            }
            _ => Ok(0.0),
        })
        .collect()
}

struct Priced<'a> {
    table: &'a CostTable,
    used: Vec<String>,
}

impl<'a> Priced<'a> {
    fn get(&mut self, name: &str) -> Result<&'a crate::costmodel::CostEntry> {
        let e = self.table.get(name)?;
        if e.user_supplied && !self.used.iter().any(|u| u == name) {
            self.used.push(name.to_string());
        }
        Ok(e)
    }
}

pub fn estimate(
    workload: &Workload,
    scheme: &QuantScheme,
    mode: HardwareMode,
    hw: &HardwareConfig,
    cost: &CostTable,
    sparsity: &SparsitySource,
) -> Result<RunReport> {
    let scheme = match mode {
        HardwareMode::HcimBinary => scheme.with_mode(PsqMode::Binary),
        _ => scheme.with_mode(PsqMode::Ternary),
    };
    scheme.validate()?;
    let sparsities = layer_sparsities(workload, &scheme, mode, hw, sparsity)?;
    let mut priced = Priced {
        table: cost,
        used: Vec::new(),
    };
    let mut report = RunReport::empty(&workload.name, &mode.name(), cost.technology());
    for (layer, &sp) in workload.layers.iter().zip(&sparsities) {
        let p = plan(layer, &scheme, hw.xbar_rows, hw.xbar_cols)?;
        let components = if p.crossbars() == 0 {
            vec![ComponentCost::new("passthrough", 0.0, 0.0, 0.0)]
        } else {
            layer_components(&p, &scheme, mode, hw, &mut priced, sp)?
        };
        report.layers.push(LayerReport {
            name: layer.name.clone(),
            components,
            sparsity: sp,
            extrapolated: sp > GATING_ANCHOR + 1e-12,
            overflows: 0,
            movement_events: p.movement_events(),
            crossbars: p.crossbars() as u64,
        });
    }
    report.user_supplied = priced.used;
    Ok(report)
}

fn layer_components(
    p: &TilePlan,
    scheme: &QuantScheme,
    mode: HardwareMode,
    hw: &HardwareConfig,
    priced: &mut Priced<'_>,
    sparsity: f64,
) -> Result<Vec<ComponentCost>> {
    let steps = scheme.steps() as u64;
    let mvms = p.mvm_count as u64;
    let tiles = p.crossbars() as f64;
    let phys = p.total_physical_columns() as u64;
    let mut out = Vec::new();

    let xb = priced.get("crossbar_mvm")?;
    let cells = (hw.xbar_rows * hw.xbar_cols) as f64 / REFERENCE_CELLS;
    out.push(ComponentCost::new(
        "crossbar",
        xb.energy_pj * (phys * steps * mvms) as f64,
        xb.latency_ns * (steps * mvms) as f64,
        xb.area_mm2 * cells * tiles,
    ));

    match mode {
        HardwareMode::HcimTernary | HardwareMode::HcimBinary => {
            let cmp = priced.get("comparator")?;
            let per_col = scheme.mode.comparators_per_column() as u64;
            out.push(ComponentCost::new(
                "comparator",
                cmp.energy_pj * (per_col * phys * steps * mvms) as f64,
                cmp.latency_ns * (steps * mvms) as f64,
                cmp.area_mm2 * (per_col as usize * hw.xbar_cols) as f64 * tiles,
            ));
            let dcim = priced.get(&hw.dcim_entry)?;
            let params = DcimEnergyParams::from_entry(dcim, priced.table.nongateable_fraction());
            let counters = analytic_counters(steps * mvms, phys, sparsity);
            let timing = timing_model(steps, hw.xbar_cols, &hw.timing);
            out.push(ComponentCost::new(
                "dcim",
                dcim_energy(&counters, &params),
                timing.latency_ns * mvms as f64,
                dcim.area_mm2 * tiles,
            ));
        }
        HardwareMode::Adc { bits } => {
            let adc = priced.get(&adc_entry_name(bits))?;
            let conv_steps = match hw.adc_accounting {
                AdcAccounting::PerColumn => 1,
                AdcAccounting::PerConversion => steps,
            };
            let (mut energy, mut latency) = (0.0, 0.0f64);
            for t in &p.tiles {
                let c = adc_baseline_cost(t.physical_columns as u64, conv_steps, adc, hw.adc_sharing);
                energy += c.energy_pj;
                latency = latency.max(c.latency_ns);
            }
            out.push(ComponentCost::new(
                "adc",
                energy * mvms as f64,
                latency * mvms as f64,
                adc.area_mm2 * hw.adc_sharing as f64 * tiles,
            ));
            let sa = priced.get("shift_add")?;
            out.push(ComponentCost::new(
                "shift_add",
                sa.energy_pj * (phys * steps * mvms) as f64,
                sa.latency_ns * mvms as f64,
                sa.area_mm2 * tiles,
            ));
        }
    }

    let moves = p.movement_events();
    let pm = priced.get("ps_move")?;
    let ta = priced.get("tile_add")?;
    let multi = p.row_tiles > 1;
    out.push(ComponentCost::new(
        "ps_move",
        pm.energy_pj * (moves * hw.ps_bytes) as f64,
        if multi { pm.latency_ns * mvms as f64 } else { 0.0 },
        0.0,
    ));
    out.push(ComponentCost::new(
        "tile_add",
        ta.energy_pj * moves as f64,
        ta.latency_ns * (p.adder_tree_depth() as u64 * mvms) as f64,
        ta.area_mm2 * (p.col_tiles * p.row_tiles.saturating_sub(1)) as f64,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_tile() -> Workload {
        Workload::new("one", vec![LayerSpec::fc("fc", 128, 32)])
    }

    fn energy(r: &RunReport, c: &str) -> f64 {
        r.component_energy(c)
    }

    #[test]
    fn mode_names_round_trip() {
        for m in ["hcim_ternary", "hcim_binary", "adc7", "adc4"] {
            assert_eq!(m.parse::<HardwareMode>().unwrap().name(), m);
        }
        assert!("adc".parse::<HardwareMode>().is_err());
        assert!("hcim".parse::<HardwareMode>().is_err());
    }

    #[test]
    fn gating_reduces_dcim_energy_by_24_percent() {
        let t = CostTable::builtin();
        let s = QuantScheme::cifar();
        let hw = HardwareConfig::config_a();
        let run = |f| estimate(&single_tile(), &s, HardwareMode::HcimTernary, &hw, &t, &SparsitySource::Injected(f)).unwrap();
        let (r0, r5) = (run(0.0), run(0.5));
        assert!((energy(&r0, "dcim") - 0.22 * 128.0).abs() < 1e-9);
        assert!((1.0 - energy(&r5, "dcim") / energy(&r0, "dcim") - 0.24).abs() < 1e-9);
        assert_eq!(r0.totals().latency_ns, r5.totals().latency_ns);
        assert!(!r5.layers[0].extrapolated);
        assert!(run(1.0).layers[0].extrapolated);
    }

    #[test]
    fn adc7_column_ratio() {
        let t = CostTable::builtin();
        let s = QuantScheme::cifar();
        let hw = HardwareConfig::config_a();
        let h = estimate(&single_tile(), &s, HardwareMode::HcimTernary, &hw, &t, &SparsitySource::Injected(0.0)).unwrap();
        let a = estimate(&single_tile(), &s, HardwareMode::Adc { bits: 7 }, &hw, &t, &SparsitySource::Injected(0.0)).unwrap();
        let ratio = energy(&a, "adc") / energy(&h, "dcim");
        assert!((ratio - 4.1 / 0.22).abs() < 1e-9);
        let mut per_conv = hw.clone();
        per_conv.adc_accounting = AdcAccounting::PerConversion;
        let a4 = estimate(&single_tile(), &s, HardwareMode::Adc { bits: 7 }, &per_conv, &t, &SparsitySource::Injected(0.0)).unwrap();
        assert!((energy(&a4, "adc") - 2099.2).abs() < 1e-9);
    }

    #[test]
    fn empty_workload_is_zero() {
        let w = Workload::new("empty", vec![]);
        let r = estimate(&w, &QuantScheme::cifar(), HardwareMode::HcimTernary, &HardwareConfig::config_a(), &CostTable::builtin(), &SparsitySource::Injected(0.5)).unwrap();
        assert_eq!(r.totals().energy_pj, 0.0);
        assert!(r.layers.is_empty());
    }

    #[test]
    fn unknown_entry_named() {
        let err = estimate(&single_tile(), &QuantScheme::cifar(), HardwareMode::Adc { bits: 5 }, &HardwareConfig::config_a(), &CostTable::builtin(), &SparsitySource::Injected(0.0)).unwrap_err();
        assert!(err.to_string().contains("adc5"));
    }

    #[test]
    fn measured_sparsity_is_deterministic_and_at_least_half() {
        let w = Workload::bundled("resnet20").unwrap();
        let s = QuantScheme::cifar();
        let hw = HardwareConfig::config_a();
        let src = SparsitySource::Measured { seed: 3, samples: 4 };
        let a = layer_sparsities(&w, &s, HardwareMode::HcimTernary, &hw, &src).unwrap();
        assert_eq!(a, layer_sparsities(&w, &s, HardwareMode::HcimTernary, &hw, &src).unwrap());
        for (l, sp) in w.layers.iter().zip(&a) {
            if l.is_mapped() {
                assert!((0.5..=1.0).contains(sp), "{}: {sp}", l.name);
            }
        }
        let b = layer_sparsities(&w, &s, HardwareMode::HcimBinary, &hw, &src).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn latency_invariant_and_energy_monotone_in_sparsity() {
        let w = Workload::bundled("resnet20").unwrap();
        let s = QuantScheme::cifar();
        let hw = HardwareConfig::config_a();
        let t = CostTable::builtin();
        let runs: Vec<RunReport> = [0.0, 0.2, 0.5, 0.8, 1.0]
            .iter()
            .map(|&f| estimate(&w, &s, HardwareMode::HcimTernary, &hw, &t, &SparsitySource::Injected(f)).unwrap())
            .collect();
        for pair in runs.windows(2) {
            assert_eq!(pair[0].totals().latency_ns, pair[1].totals().latency_ns);
            assert!(pair[1].totals().energy_pj < pair[0].totals().energy_pj);
        }
    }
}
