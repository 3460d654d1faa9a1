use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Event counts accumulated by a digital CiM array. Column events are counted
/// per column per row operation; gated columns contribute only to
/// `gated_columns`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounters {
    /// Clock cycles, including pipeline fill and drain.
    pub cycles: u64,
    /// Row operations issued (one per bit-stream step).
    pub row_ops: u64,
    pub precharge_reads: u64,
    pub computes: u64,
    pub stores: u64,
    pub raw_b_reads: u64,
    pub gated_columns: u64,
    pub overflow_saturations: u64,
    /// Cell writes spent loading scale factors; not steady-state energy.
    pub load_writes: u64,
    /// Column writes spent clearing partial sums between output tiles.
    pub reset_stores: u64,
}

impl EventCounters {
    /// Column slots offered by all issued row operations.
    pub fn column_slots(&self) -> u64 {
        self.precharge_reads + self.gated_columns
    }

    /// Fraction of column slots that were clock-gated.
    pub fn gated_fraction(&self) -> f64 {
        let slots = self.column_slots();
        if slots == 0 {
            0.0
        } else {
            self.gated_columns as f64 / slots as f64
        }
    }

    pub fn merge(&mut self, other: &EventCounters) {
        self.cycles += other.cycles;
        self.row_ops += other.row_ops;
        self.precharge_reads += other.precharge_reads;
        self.computes += other.computes;
        self.stores += other.stores;
        self.raw_b_reads += other.raw_b_reads;
        self.gated_columns += other.gated_columns;
        self.overflow_saturations += other.overflow_saturations;
        self.load_writes += other.load_writes;
        self.reset_stores += other.reset_stores;
    }

    /// Flat name -> count view for reports.
    pub fn snapshot(&self) -> BTreeMap<String, u64> {
        [
            ("cycles", self.cycles),
            ("row_ops", self.row_ops),
            ("precharge_reads", self.precharge_reads),
            ("computes", self.computes),
            ("stores", self.stores),
            ("raw_b_reads", self.raw_b_reads),
            ("gated_columns", self.gated_columns),
            ("overflow_saturations", self.overflow_saturations),
            ("load_writes", self.load_writes),
            ("reset_stores", self.reset_stores),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}
