use serde::{Deserialize, Serialize};

use super::table::CostEntry;
use crate::dcim::EventCounters;

/// Bit-stream steps the table's per-column digital CiM energy is quoted for.
pub const REFERENCE_STEPS: usize = 4;

/// Read/compute/store shares of one column operation's energy.
const SPLIT: [f64; 3] = [0.4, 0.4, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcimEnergyParams {
    pub e_read_pj: f64,
    pub e_compute_pj: f64,
    pub e_store_pj: f64,
    /// Share of full-activity energy spent regardless of gating (precharge
    /// drivers, row decoders, clock tree).
    pub nongateable_fraction: f64,
}

impl DcimEnergyParams {
    /// Split a per-column energy quoted over `steps` operations into
    /// per-event energies.
    pub fn calibrated(per_column_pj: f64, steps: usize, nongateable_fraction: f64) -> Self {
        let per_op = per_column_pj / steps as f64;
        Self {
            e_read_pj: per_op * SPLIT[0],
            e_compute_pj: per_op * SPLIT[1],
            e_store_pj: per_op * SPLIT[2],
            nongateable_fraction,
        }
    }

    pub fn from_entry(entry: &CostEntry, nongateable_fraction: f64) -> Self {
        Self::calibrated(entry.energy_pj, REFERENCE_STEPS, nongateable_fraction)
    }

    pub fn per_op_pj(&self) -> f64 {
        self.e_read_pj + self.e_compute_pj + self.e_store_pj
    }
}

impl Default for DcimEnergyParams {
    fn default() -> Self {
        Self::calibrated(0.22, REFERENCE_STEPS, 0.52)
    }
}

/// Energy of a digital CiM run from its event counts.
///
/// Every column slot (active or gated) pays the non-gateable floor; active
/// events pay the gateable remainder of their per-event energy. Reset stores
/// between output tiles are charged at the store energy.
pub fn dcim_energy(counters: &EventCounters, params: &DcimEnergyParams) -> f64 {
    let g = 1.0 - params.nongateable_fraction;
    let floor = params.nongateable_fraction * params.per_op_pj() * counters.column_slots() as f64;
    let active = counters.precharge_reads as f64 * params.e_read_pj
        + counters.computes as f64 * params.e_compute_pj
        + counters.stores as f64 * params.e_store_pj;
    floor + g * active + counters.reset_stores as f64 * params.e_store_pj
}

/// Counters for `ops` row operations over `columns` columns with a given
/// fraction of gated column slots. Active slots are rounded to the nearest
/// integer.
pub fn analytic_counters(ops: u64, columns: u64, sparsity: f64) -> EventCounters {
    let slots = ops * columns;
    let active = ((slots as f64) * (1.0 - sparsity.clamp(0.0, 1.0))).round() as u64;
    EventCounters {
        cycles: ops,
        row_ops: ops,
        precharge_reads: active,
        computes: active,
        stores: active,
        gated_columns: slots - active,
        ..Default::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcCost {
    pub conversions: u64,
    pub energy_pj: f64,
    pub latency_ns: f64,
}

/// ADC conversions of `columns x steps` values shared across `sharing`
/// converters.
pub fn adc_baseline_cost(columns: u64, steps: u64, entry: &CostEntry, sharing: u64) -> AdcCost {
    assert!(sharing >= 1, "at least one ADC per crossbar");
    let conversions = columns * steps;
    AdcCost {
        conversions,
        energy_pj: conversions as f64 * entry.energy_pj,
        latency_ns: conversions as f64 * entry.latency_ns / sharing as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::CostTable;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn calibrated_split() {
        let p = DcimEnergyParams::default();
        assert!(close(p.e_read_pj, 0.022));
        assert!(close(p.e_compute_pj, 0.022));
        assert!(close(p.e_store_pj, 0.011));
        assert!(close(4.0 * p.per_op_pj(), 0.22));
    }

    #[test]
    fn sparsity_points_per_column() {
        let p = DcimEnergyParams::default();
        let e0 = dcim_energy(&analytic_counters(4, 1, 0.0), &p);
        let e5 = dcim_energy(&analytic_counters(4, 128, 0.5), &p) / 128.0;
        let e1 = dcim_energy(&analytic_counters(4, 1, 1.0), &p);
        assert!(close(e0, 0.22));
        assert!(close(e5, 0.1672));
        assert!(close(e1, 0.1144));
        assert!(close(1.0 - e5 / e0, 0.24));
    }

    #[test]
    fn gated_events_cost_only_the_floor() {
        let p = DcimEnergyParams::default();
        let c = EventCounters {
            gated_columns: 10,
            ..Default::default()
        };
        assert!(close(dcim_energy(&c, &p), 10.0 * 0.52 * 0.055));
    }

    #[test]
    fn adc_examples() {
        let t = CostTable::builtin();
        let sar7 = adc_baseline_cost(128, 4, t.get("sar7").unwrap(), 1);
        assert_eq!(sar7.conversions, 512);
        assert!(close(sar7.energy_pj, 2099.2));
        assert!(close(sar7.latency_ns, 778.24));
        let flash = adc_baseline_cost(128, 4, t.get("flash4").unwrap(), 1);
        assert!(close(flash.energy_pj, 952.32));
        assert!(close(flash.latency_ns, 25.6));
        let none = adc_baseline_cost(128, 0, t.get("flash4").unwrap(), 1);
        assert_eq!((none.energy_pj, none.latency_ns), (0.0, 0.0));
        let shared = adc_baseline_cost(128, 4, t.get("sar7").unwrap(), 4);
        assert!(close(shared.latency_ns, 778.24 / 4.0));
    }

    #[test]
    fn per_column_ratios() {
        let t = CostTable::builtin();
        let dcim = t.get("dcim_A").unwrap().energy_pj;
        assert!((t.get("flash4").unwrap().energy_pj / dcim / 8.4545 - 1.0).abs() < 1e-3);
        assert!((t.get("sar7").unwrap().energy_pj / dcim / 18.636 - 1.0).abs() < 1e-3);
        assert!(t.get("sar6").unwrap().latency_ns > t.get("flash4").unwrap().latency_ns);
    }

    proptest::proptest! {
        #[test]
        fn energy_non_increasing_in_sparsity(a in 0.0f64..1.0, b in 0.0f64..1.0, cols in 1u64..512) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p = DcimEnergyParams::default();
            let e_lo = dcim_energy(&analytic_counters(4, cols, lo), &p);
            let e_hi = dcim_energy(&analytic_counters(4, cols, hi), &p);
            proptest::prop_assert!(e_hi <= e_lo + 1e-12);
        }
    }
}
