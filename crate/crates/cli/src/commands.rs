//! Subcommand implementations. Each writes its files under the configured
//! output directory and returns a printable summary.

use std::path::PathBuf;

use anyhow::Context;
use psqsim::costmodel::{check_csv_totals, normalize, CsvRow, RunReport};
use psqsim::dcim::{GateFault, Gates};
use psqsim::mapper::{
    estimate, run_functional, toy_network, AlphaPolicy, FunctionalConfig, HardwareMode, SparsitySource, ToyKind,
};
use psqsim::quantkit::PsqMode;
use psqsim::selftest::{run_selftest, SelftestReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::exit::Failure;
use crate::output::{file_stem, OutputDir};

pub const REFERENCE_MODE: HardwareMode = HardwareMode::HcimTernary;

pub fn cmd_selftest(fault: Option<GateFault>, seed: u64) -> anyhow::Result<SelftestReport> {
    let gates = fault.map_or(Gates::REFERENCE, Gates::with_fault);
    let report = run_selftest(gates, seed)?;
    if report.passed() {
        Ok(report)
    } else {
        Err(Failure::Mismatch(format!("self-test failed\n{}", report.summary())).into())
    }
}

#[derive(Debug, Serialize)]
struct SparsityRow {
    network: String,
    mode: String,
    crossbar: String,
    layer: String,
    alpha: i64,
    sf_exponent: i32,
    crossbars: usize,
    codes: u64,
    zero_codes: u64,
    sparsity: f64,
    overflows: u64,
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub summary: String,
    /// `(mode, overall sparsity)` per verified mode.
    pub sparsity: Vec<(String, f64)>,
    pub files: Vec<String>,
}

pub fn cmd_verify(cfg: &ExperimentConfig, fault: Option<GateFault>) -> anyhow::Result<VerifyOutcome> {
    let scheme = cfg.scheme();
    let kind: ToyKind = cfg.verify_network.parse()?;
    let network = toy_network(kind, cfg.seed, &scheme, cfg.verify_batch);
    let mut modes: Vec<PsqMode> = cfg
        .modes()
        .into_iter()
        .filter_map(|m| match m {
            HardwareMode::HcimTernary => Some(PsqMode::Ternary),
            HardwareMode::HcimBinary => Some(PsqMode::Binary),
            HardwareMode::Adc { .. } => None,
        })
        .collect();
    if modes.is_empty() {
        modes = vec![PsqMode::Ternary, PsqMode::Binary];
    }
    let crossbar = format!("{0}x{0}", cfg.crossbar);
    let mut rows = Vec::new();
    let mut summary = String::new();
    let mut sparsity = Vec::new();
    for mode in modes {
        let mut fc = FunctionalConfig::new(scheme.with_mode(mode), cfg.crossbar, cfg.crossbar);
        fc.alpha = AlphaPolicy::Calibrated {
            target_zero_fraction: cfg.alpha_target,
        };
        fc.phases_per_op = cfg.timing.phases_per_op;
        if let Some(f) = fault {
            fc.gates = Gates::with_fault(f);
        }
        let result = run_functional(&network, &fc)?;
        let mode_name = if mode == PsqMode::Ternary { "hcim_ternary" } else { "hcim_binary" };
        let tiles: usize = result.layers.iter().map(|l| l.tiles_verified).sum();
        summary.push_str(&format!(
            "PASS {} {mode_name} {crossbar}: {} layers, {tiles} tiles match the reference, sparsity {:.4}\n",
            network.name,
            result.layers.len(),
            result.overall_sparsity()
        ));
        sparsity.push((mode_name.to_string(), result.overall_sparsity()));
        for l in &result.layers {
            rows.push(SparsityRow {
                network: network.name.clone(),
                mode: mode_name.into(),
                crossbar: crossbar.clone(),
                layer: l.name.clone(),
                alpha: l.alpha,
                sf_exponent: l.sf_exponent,
                crossbars: l.crossbars,
                codes: l.codes,
                zero_codes: l.zero_codes,
                sparsity: l.sparsity,
                overflows: l.overflows,
            });
        }
    }
    let mut out = OutputDir::create(&cfg.out)?;
    out.write_csv("verify/sparsity.csv", &rows)?;
    let files = out.finish("verify", cfg)?;
    Ok(VerifyOutcome {
        summary,
        sparsity,
        files,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub workload: String,
    pub mode: String,
    pub energy_pj: f64,
    pub latency_ns: f64,
    pub area_mm2: f64,
    pub latency_area: f64,
    pub edap: f64,
    pub norm_energy: f64,
    pub norm_latency: f64,
    pub norm_latency_area: f64,
    pub norm_edap: f64,
    pub mean_sparsity: f64,
    pub movement_events: u64,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    workload: String,
    mode: String,
    technology: String,
    energy_pj: f64,
    latency_ns: f64,
    area_mm2: f64,
    latency_area: f64,
    edap: f64,
    mean_sparsity: f64,
    movement_events: u64,
    user_supplied: Vec<String>,
}

#[derive(Debug)]
pub struct EstimateOutcome {
    pub reports: Vec<RunReport>,
    pub comparison: Vec<ComparisonRow>,
    /// Per-run CSV paths, parallel to `reports`.
    pub run_files: Vec<PathBuf>,
    pub files: Vec<String>,
    pub summary: String,
}

pub fn run_csv_name(workload: &str, mode: &str) -> String {
    format!("estimate/{}__{}.csv", file_stem(workload), file_stem(mode))
}

pub fn cmd_estimate(cfg: &ExperimentConfig, check_totals: bool) -> anyhow::Result<EstimateOutcome> {
    let scheme = cfg.scheme();
    let hw = cfg.hardware()?;
    let table = cfg.cost_table()?;
    let workloads = cfg.load_workloads()?;
    let modes = cfg.modes();
    let source = cfg.sparsity_source();
    let mut eval_modes = modes.clone();
    if !eval_modes.contains(&REFERENCE_MODE) {
        eval_modes.push(REFERENCE_MODE);
    }
    let pairs: Vec<(usize, HardwareMode)> = (0..workloads.len())
        .flat_map(|w| eval_modes.iter().map(move |&m| (w, m)))
        .collect();
    let results: Vec<RunReport> = pairs
        .par_iter()
        .map(|&(w, m)| estimate(&workloads[w], &scheme, m, &hw, &table, &source))
        .collect::<psqsim::Result<_>>()?;

    let mut out = OutputDir::create(&cfg.out)?;
    let mut reports = Vec::new();
    let mut run_files = Vec::new();
    let mut comparison = Vec::new();
    let mut summaries = Vec::new();
    for (w, workload) in workloads.iter().enumerate() {
        let of_workload: Vec<(&HardwareMode, &RunReport)> = pairs
            .iter()
            .zip(&results)
            .filter(|((pw, _), _)| *pw == w)
            .map(|((_, m), r)| (m, r))
            .collect();
        let reference = of_workload
            .iter()
            .find(|(m, _)| **m == REFERENCE_MODE)
            .map(|(_, r)| r.totals())
            .expect("reference mode evaluated");
        for (mode, report) in of_workload.into_iter().filter(|(m, _)| modes.contains(m)) {
            let t = report.totals();
            let rel = run_csv_name(&workload.name, &mode.name());
            run_files.push(out.write_csv(&rel, &report.csv_rows())?);
            let n = |v: f64, r: f64, metric| normalize(&[v], r, metric).map(|x| x[0]);
            comparison.push(ComparisonRow {
                workload: workload.name.clone(),
                mode: mode.name(),
                energy_pj: t.energy_pj,
                latency_ns: t.latency_ns,
                area_mm2: t.area_mm2,
                latency_area: t.latency_area,
                edap: t.edap,
                norm_energy: n(t.energy_pj, reference.energy_pj, "energy")?,
                norm_latency: n(t.latency_ns, reference.latency_ns, "latency")?,
                norm_latency_area: n(t.latency_area, reference.latency_area, "latency_area")?,
                norm_edap: n(t.edap, reference.edap, "edap")?,
                mean_sparsity: report.mean_sparsity(),
                movement_events: report.movement_events(),
            });
            summaries.push(RunSummary {
                workload: workload.name.clone(),
                mode: mode.name(),
                technology: report.technology.clone(),
                energy_pj: t.energy_pj,
                latency_ns: t.latency_ns,
                area_mm2: t.area_mm2,
                latency_area: t.latency_area,
                edap: t.edap,
                mean_sparsity: report.mean_sparsity(),
                movement_events: report.movement_events(),
                user_supplied: report.user_supplied.clone(),
            });
            reports.push(report.clone());
        }
    }
    out.write_csv("estimate/comparison.csv", &comparison)?;
    #[derive(Serialize)]
    struct SummaryDoc<'a> {
        run: &'a [RunSummary],
    }
    out.write_text("estimate/summary.toml", &toml::to_string(&SummaryDoc { run: &summaries })?)?;

    if check_totals {
        for path in &run_files {
            let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
            let rows: Vec<CsvRow> = rdr.deserialize().collect::<Result<_, _>>()?;
            check_csv_totals(&rows, 1e-9)
                .map_err(|e| Failure::Invariant(format!("{}: {e}", path.display())))?;
        }
    }

    let mut summary = String::new();
    for c in &comparison {
        summary.push_str(&format!(
            "{:<16} {:<13} energy {:>14.3} pJ ({:>7.3}x)  latency {:>14.3} ns ({:>6.3}x)  sparsity {:.3}\n",
            c.workload, c.mode, c.energy_pj, c.norm_energy, c.latency_ns, c.norm_latency, c.mean_sparsity
        ));
    }
    if check_totals {
        summary.push_str(&format!("totals check passed for {} files\n", run_files.len()));
    }
    let files = out.finish("estimate", cfg)?;
    Ok(EstimateOutcome {
        reports,
        comparison,
        run_files,
        files,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    Sparsity,
    AdcBits,
    CrossbarSize,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Sparsity => "sparsity",
            SweepAxis::AdcBits => "adc_bits",
            SweepAxis::CrossbarSize => "crossbar_size",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub workload: String,
    pub axis: String,
    pub value: f64,
    pub mode: String,
    pub energy_pj: f64,
    pub latency_ns: f64,
    pub area_mm2: f64,
    pub dcim_energy_pj: f64,
    /// Digital CiM energy saved relative to zero sparsity.
    pub dcim_reduction: f64,
    pub energy_vs_hcim_ternary: f64,
    pub movement_events: u64,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub files: Vec<String>,
    pub summary: String,
}

/// Sweep points for an axis: explicit values, else the configured ones.
pub fn sweep_points(cfg: &ExperimentConfig, axis: SweepAxis, values: Option<&[f64]>) -> anyhow::Result<Vec<f64>> {
    let points: Vec<f64> = match values {
        Some(v) => v.to_vec(),
        None => match axis {
            SweepAxis::Sparsity => cfg.sweep_sparsity.clone(),
            SweepAxis::AdcBits => cfg.sweep_adc_bits.iter().map(|&b| b as f64).collect(),
            SweepAxis::CrossbarSize => cfg.sweep_crossbar_size.iter().map(|&s| s as f64).collect(),
        },
    };
    if points.is_empty() {
        return Err(Failure::Config(format!("no points given for sweep axis {}", axis.name())).into());
    }
    for &p in &points {
        let ok = match axis {
            SweepAxis::Sparsity => (0.0..=1.0).contains(&p),
            SweepAxis::AdcBits => p.fract() == 0.0 && (1.0..=16.0).contains(&p),
            SweepAxis::CrossbarSize => p == 128.0 || p == 64.0,
        };
        if !ok {
            return Err(Failure::Config(format!("invalid {} point {p}", axis.name())).into());
        }
    }
    Ok(points)
}

pub fn cmd_sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: Option<&[f64]>) -> anyhow::Result<SweepOutcome> {
    let points = sweep_points(cfg, axis, values)?;
    let scheme = cfg.scheme();
    let table = cfg.cost_table()?;
    let workloads = cfg.load_workloads()?;
    let source = cfg.sparsity_source();

    let rows: Vec<Vec<SweepRow>> = workloads
        .par_iter()
        .map(|w| -> anyhow::Result<Vec<SweepRow>> {
            let hw = cfg.hardware()?;
            let reference = estimate(w, &scheme, REFERENCE_MODE, &hw, &table, &source)?;
            let zero = estimate(w, &scheme, REFERENCE_MODE, &hw, &table, &SparsitySource::Injected(0.0))?;
            let dcim_zero = zero.component_energy("dcim");
            let ref_energy = reference.totals().energy_pj;
            points
                .iter()
                .map(|&v| {
                    let (mode, report) = match axis {
                        SweepAxis::Sparsity => (
                            REFERENCE_MODE,
                            estimate(w, &scheme, REFERENCE_MODE, &hw, &table, &SparsitySource::Injected(v))?,
                        ),
                        SweepAxis::AdcBits => {
                            let m = HardwareMode::Adc { bits: v as u32 };
                            (m, estimate(w, &scheme, m, &hw, &table, &source)?)
                        }
                        SweepAxis::CrossbarSize => {
                            let hw = cfg.hardware_for(v as usize)?;
                            (REFERENCE_MODE, estimate(w, &scheme, REFERENCE_MODE, &hw, &table, &source)?)
                        }
                    };
                    let t = report.totals();
                    let dcim = report.component_energy("dcim");
                    Ok(SweepRow {
                        workload: w.name.clone(),
                        axis: axis.name().into(),
                        value: v,
                        mode: mode.name(),
                        energy_pj: t.energy_pj,
                        latency_ns: t.latency_ns,
                        area_mm2: t.area_mm2,
                        dcim_energy_pj: dcim,
                        dcim_reduction: if axis == SweepAxis::Sparsity && dcim_zero > 0.0 {
                            1.0 - dcim / dcim_zero
                        } else {
                            0.0
                        },
                        energy_vs_hcim_ternary: if ref_energy > 0.0 { t.energy_pj / ref_energy } else { 0.0 },
                        movement_events: report.movement_events(),
                    })
                })
                .collect()
        })
        .collect::<anyhow::Result<_>>()?;
    let rows: Vec<SweepRow> = rows.into_iter().flatten().collect();
    check_sweep(axis, &rows)?;

    let mut out = OutputDir::create(&cfg.out)?;
    out.write_csv(&format!("sweep/{}.csv", axis.name()), &rows)?;
    let files = out.finish("sweep", cfg)?;
    let mut summary = String::new();
    for r in &rows {
        summary.push_str(&format!(
            "{:<16} {}={:<6} {:<13} energy {:>14.3} pJ  latency {:>14.3} ns  dcim reduction {:>6.2}%  movement {}\n",
            r.workload,
            r.axis,
            r.value,
            r.mode,
            r.energy_pj,
            r.latency_ns,
            100.0 * r.dcim_reduction,
            r.movement_events
        ));
    }
    Ok(SweepOutcome { rows, files, summary })
}

/// Properties each sweep must show, checked per workload in axis order.
fn check_sweep(axis: SweepAxis, rows: &[SweepRow]) -> anyhow::Result<()> {
    let mut by_workload: Vec<&str> = rows.iter().map(|r| r.workload.as_str()).collect();
    by_workload.dedup();
    for w in by_workload {
        let mut points: Vec<&SweepRow> = rows.iter().filter(|r| r.workload == w).collect();
        points.sort_by(|a, b| a.value.total_cmp(&b.value));
        for pair in points.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let violation = match axis {
                SweepAxis::Sparsity if hi.energy_pj > lo.energy_pj => {
                    Some(format!("energy rises from sparsity {} to {}", lo.value, hi.value))
                }
                SweepAxis::Sparsity if hi.latency_ns != lo.latency_ns => {
                    Some(format!("latency changes between sparsity {} and {}", lo.value, hi.value))
                }
                SweepAxis::CrossbarSize if lo.movement_events < hi.movement_events => Some(format!(
                    "{}x{0} crossbars move fewer partial sums than {}x{1}",
                    lo.value, hi.value
                )),
                _ => None,
            };
            if let Some(v) = violation {
                return Err(Failure::Invariant(format!("{w}: {v}")).into());
            }
        }
    }
    Ok(())
}
