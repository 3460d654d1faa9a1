//! Digital CiM array holding scale factors and partial-sum accumulators.
//!
//! Memory layout per column: scale factor `j` occupies rows
//! `j * sf_bits .. (j + 1) * sf_bits` (LSB first) of the scale-factor memory;
//! the partial sum occupies `ps_bits` rows of the partial-sum memory in two's
//! complement. Scale-factor signs live in a side table read by the bit-line
//! switch logic together with `p`.
//!
//! A row operation moves through Read, Compute and Store, one stage per
//! cycle. Back-to-back operations target the same partial-sum row, so the
//! Read stage takes its partial-sum operand from the result waiting in the
//! Store slot when one exists.

use super::counters::EventCounters;
use super::gates::{bitwise_read, Gates};
use crate::quantkit::{QuantScheme, ScaleFactorSet, TernaryCode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DcimGeometry {
    pub columns: usize,
    pub steps: usize,
    pub sf_bits: u32,
    pub ps_bits: u32,
}

impl DcimGeometry {
    pub fn for_scheme(scheme: &QuantScheme, columns: usize) -> Self {
        Self {
            columns,
            steps: scheme.steps(),
            sf_bits: scheme.sf_bits,
            ps_bits: scheme.ps_bits,
        }
    }

    pub fn sf_rows(&self) -> usize {
        self.steps * self.sf_bits as usize
    }

    /// Total memory rows: scale factors plus one partial-sum word.
    pub fn rows(&self) -> usize {
        self.sf_rows() + self.ps_bits as usize
    }

    fn ps_min(&self) -> i64 {
        -(1i64 << (self.ps_bits - 1))
    }

    fn ps_max(&self) -> i64 {
        (1i64 << (self.ps_bits - 1)) - 1
    }

    fn validate(&self) -> Result<()> {
        if self.columns == 0 || self.steps == 0 {
            return Err(Error::DimensionMismatch("empty digital CiM array".into()));
        }
        if self.ps_bits < 2 || self.ps_bits > 32 || self.sf_bits == 0 || self.sf_bits >= self.ps_bits {
            return Err(Error::DimensionMismatch(format!(
                "unsupported widths sf_bits={} ps_bits={}",
                self.sf_bits, self.ps_bits
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnOp {
    Add,
    Subtract,
    Skip,
}

impl ColumnOp {
    /// Add when `sign(p) * sign(s) > 0`, subtract when negative, skip on `p = 0`.
    pub fn select(p: TernaryCode, sf_negative: bool) -> Self {
        match (p, sf_negative) {
            (TernaryCode::Zero, _) => ColumnOp::Skip,
            (TernaryCode::Plus, false) | (TernaryCode::Minus, true) => ColumnOp::Add,
            (TernaryCode::Plus, true) | (TernaryCode::Minus, false) => ColumnOp::Subtract,
        }
    }
}

#[derive(Debug, Clone)]
struct RowOp {
    step: usize,
    ops: Vec<ColumnOp>,
}

#[derive(Debug, Clone, Copy, Default)]
struct ReadLatch {
    or: u32,
    nand: u32,
    raw_b: u32,
}

#[derive(Debug, Clone, Copy, Default)]
struct ColumnResult {
    word: u32,
    cb_out: bool,
    saturated: bool,
}

#[derive(Debug)]
struct ReadStage {
    op: RowOp,
    latches: Vec<ReadLatch>,
}

#[derive(Debug)]
struct StoreStage {
    op: RowOp,
    results: Vec<ColumnResult>,
}

#[derive(Debug)]
pub struct DcimArray {
    geometry: DcimGeometry,
    gates: Gates,
    phases_per_op: u32,
    sf_mem: Vec<bool>,
    sf_negative: Vec<bool>,
    ps_mem: Vec<bool>,
    cb_out: Vec<bool>,
    compute_slot: Option<ReadStage>,
    store_slot: Option<StoreStage>,
    counters: EventCounters,
}

impl DcimArray {
    /// Pre-load scale factors. The partial-sum memory starts at zero and the
    /// load is charged to `load_writes` only.
    pub fn load_scale_factors(geometry: DcimGeometry, sf: &ScaleFactorSet) -> Result<Self> {
        geometry.validate()?;
        if sf.steps() != geometry.steps || sf.columns() != geometry.columns || sf.sf_bits() != geometry.sf_bits {
            return Err(Error::DimensionMismatch(format!(
                "scale factors {}x{} ({}-bit) for a {}x{} ({}-bit) array",
                sf.steps(),
                sf.columns(),
                sf.sf_bits(),
                geometry.steps,
                geometry.columns,
                geometry.sf_bits
            )));
        }
        let cols = geometry.columns;
        let mut sf_mem = vec![false; geometry.sf_rows() * cols];
        let mut sf_negative = vec![false; geometry.steps * cols];
        for j in 0..geometry.steps {
            for c in 0..cols {
                let v = sf.get(j, c);
                sf_negative[j * cols + c] = v.negative;
                for b in 0..geometry.sf_bits as usize {
                    sf_mem[(j * geometry.sf_bits as usize + b) * cols + c] = (v.magnitude >> b) & 1 == 1;
                }
            }
        }
        Ok(Self {
            geometry,
            gates: Gates::REFERENCE,
            phases_per_op: 1,
            sf_mem,
            sf_negative,
            ps_mem: vec![false; geometry.ps_bits as usize * cols],
            cb_out: vec![false; cols],
            compute_slot: None,
            store_slot: None,
            counters: EventCounters {
                load_writes: (geometry.sf_rows() * cols) as u64,
                ..Default::default()
            },
        })
    }

    pub fn with_gates(mut self, gates: Gates) -> Self {
        self.gates = gates;
        self
    }

    pub fn with_phases_per_op(mut self, phases: u32) -> Self {
        self.phases_per_op = phases.max(1);
        self
    }

    pub fn geometry(&self) -> &DcimGeometry {
        &self.geometry
    }

    pub fn counters(&self) -> &EventCounters {
        &self.counters
    }

    /// Final carry/borrow of each column from its last active operation.
    pub fn cb_out(&self) -> &[bool] {
        &self.cb_out
    }

    /// Read back the stored scale-factor magnitudes, `[step][column]`.
    pub fn read_scale_factor_magnitudes(&self) -> Vec<Vec<u64>> {
        (0..self.geometry.steps)
            .map(|j| (0..self.geometry.columns).map(|c| self.sf_magnitude(j, c) as u64).collect())
            .collect()
    }

    fn sf_magnitude(&self, step: usize, column: usize) -> u32 {
        let cols = self.geometry.columns;
        (0..self.geometry.sf_bits as usize).fold(0u32, |acc, b| {
            acc | ((self.sf_mem[(step * self.geometry.sf_bits as usize + b) * cols + column] as u32) << b)
        })
    }

    fn ps_word(&self, column: usize) -> u32 {
        let cols = self.geometry.columns;
        (0..self.geometry.ps_bits as usize).fold(0u32, |acc, b| acc | ((self.ps_mem[b * cols + column] as u32) << b))
    }

    fn write_ps_word(&mut self, column: usize, word: u32) {
        let cols = self.geometry.columns;
        for b in 0..self.geometry.ps_bits as usize {
            self.ps_mem[b * cols + column] = (word >> b) & 1 == 1;
        }
    }

    fn decode(&self, word: u32) -> i64 {
        let bits = self.geometry.ps_bits;
        let v = word as i64;
        if (word >> (bits - 1)) & 1 == 1 {
            v - (1i64 << bits)
        } else {
            v
        }
    }

    fn encode(&self, value: i64) -> u32 {
        (value as u64 & ((1u64 << self.geometry.ps_bits) - 1)) as u32
    }

    fn word_mask(&self) -> u32 {
        ((1u64 << self.geometry.ps_bits) - 1) as u32
    }

    /// Overwrite the accumulators directly (test and self-test preload).
    pub fn write_partial_sums(&mut self, values: &[i64]) -> Result<()> {
        self.flush();
        if values.len() != self.geometry.columns {
            return Err(Error::DimensionMismatch(format!(
                "{} partial sums for {} columns",
                values.len(),
                self.geometry.columns
            )));
        }
        for (c, &v) in values.iter().enumerate() {
            if v < self.geometry.ps_min() || v > self.geometry.ps_max() {
                return Err(Error::DimensionMismatch(format!(
                    "partial sum {v} does not fit in {} bits",
                    self.geometry.ps_bits
                )));
            }
            let word = self.encode(v);
            self.write_ps_word(c, word);
        }
        self.counters.load_writes += (self.geometry.ps_bits as usize * self.geometry.columns) as u64;
        Ok(())
    }

    /// Drain the pipeline and decode every column's accumulator.
    pub fn read_partial_sums(&mut self) -> Vec<i64> {
        self.flush();
        (0..self.geometry.columns).map(|c| self.decode(self.ps_word(c))).collect()
    }

    /// Drain, then zero every accumulator (charged as one store per column).
    pub fn reset_partial_sums(&mut self) {
        self.flush();
        self.ps_mem.iter_mut().for_each(|b| *b = false);
        self.counters.reset_stores += self.geometry.columns as u64;
    }

    fn row_op(&self, p: &[TernaryCode], step: usize) -> Result<RowOp> {
        if p.len() != self.geometry.columns {
            return Err(Error::DimensionMismatch(format!(
                "{} codes for {} columns",
                p.len(),
                self.geometry.columns
            )));
        }
        if step >= self.geometry.steps {
            return Err(Error::DimensionMismatch(format!(
                "step {step} outside {} scale-factor groups",
                self.geometry.steps
            )));
        }
        let cols = self.geometry.columns;
        let ops = p
            .iter()
            .enumerate()
            .map(|(c, &code)| ColumnOp::select(code, self.sf_negative[step * cols + c]))
            .collect();
        Ok(RowOp { step, ops })
    }

    /// Issue one row operation and let it complete before returning.
    pub fn apply_step(&mut self, p: &[TernaryCode], step: usize) -> Result<()> {
        self.issue_step(p, step)?;
        self.flush();
        Ok(())
    }

    /// Same as [`apply_step`](Self::apply_step) but taking raw 2-bit codes;
    /// pattern `10` is rejected before anything is issued.
    pub fn apply_step_bits(&mut self, p_bits: &[u8], step: usize) -> Result<()> {
        let codes = p_bits
            .iter()
            .map(|&b| TernaryCode::from_bits(b))
            .collect::<Result<Vec<_>>>()?;
        self.apply_step(&codes, step)
    }

    /// Issue one row operation into the pipeline, advancing it by one cycle.
    /// Results become visible after [`flush`](Self::flush).
    pub fn issue_step(&mut self, p: &[TernaryCode], step: usize) -> Result<()> {
        let op = self.row_op(p, step)?;
        self.tick(Some(op));
        Ok(())
    }

    /// Clock the pipeline until it is empty.
    pub fn flush(&mut self) {
        while self.compute_slot.is_some() || self.store_slot.is_some() {
            self.tick(None);
        }
    }

    fn tick(&mut self, incoming: Option<RowOp>) {
        // Store: write back results computed last cycle.
        if let Some(stage) = self.store_slot.take() {
            for (c, (op, r)) in stage.op.ops.iter().zip(&stage.results).enumerate() {
                if *op != ColumnOp::Skip {
                    self.write_ps_word(c, r.word);
                    self.cb_out[c] = r.cb_out;
                    self.counters.stores += 1;
                    self.counters.overflow_saturations += r.saturated as u64;
                }
            }
        }
        // Compute: column peripherals on the latched bit-line values.
        if let Some(stage) = self.compute_slot.take() {
            let results = stage
                .op
                .ops
                .iter()
                .zip(&stage.latches)
                .map(|(op, latch)| match op {
                    ColumnOp::Skip => ColumnResult::default(),
                    _ => {
                        self.counters.computes += 1;
                        self.compute_column(*op, latch)
                    }
                })
                .collect();
            self.store_slot = Some(StoreStage { op: stage.op, results });
        }
        // Read: precharge and sense the enabled rows of active columns.
        if let Some(op) = incoming {
            let latches = (0..self.geometry.columns)
                .map(|c| match op.ops[c] {
                    ColumnOp::Skip => {
                        self.counters.gated_columns += 1;
                        ReadLatch::default()
                    }
                    col_op => {
                        self.counters.precharge_reads += 1;
                        self.read_column(c, op.step, col_op)
                    }
                })
                .collect();
            self.compute_slot = Some(ReadStage { op, latches });
            self.counters.row_ops += 1;
        }
        self.counters.cycles += self.phases_per_op as u64;
    }

    fn read_column(&mut self, c: usize, step: usize, op: ColumnOp) -> ReadLatch {
        let a = match &self.store_slot {
            Some(s) if s.op.ops[c] != ColumnOp::Skip => s.results[c].word,
            _ => self.ps_word(c),
        };
        let b = self.sf_magnitude(step, c);
        let mut latch = ReadLatch::default();
        for i in 0..self.geometry.ps_bits {
            let lines = bitwise_read((a >> i) & 1 == 1, (b >> i) & 1 == 1);
            latch.or |= (lines.or as u32) << i;
            latch.nand |= (lines.nand as u32) << i;
        }
        if op == ColumnOp::Subtract {
            latch.raw_b = b;
            self.counters.raw_b_reads += 1;
        }
        latch
    }

    fn compute_column(&self, op: ColumnOp, latch: &ReadLatch) -> ColumnResult {
        let bits = self.geometry.ps_bits;
        let mut word = 0u32;
        let mut chain = false;
        let mut into_msb = false;
        for i in 0..bits {
            let or = (latch.or >> i) & 1 == 1;
            let nand = (latch.nand >> i) & 1 == 1;
            let xor = or & nand;
            let and = !nand;
            if i == bits - 1 {
                into_msb = chain;
            }
            let (bit, next) = match op {
                ColumnOp::Add => (self.gates.add)(xor, and, chain),
                _ => (self.gates.sub)(xor, (latch.raw_b >> i) & 1 == 1, chain),
            };
            word |= (bit as u32) << i;
            chain = next;
        }
        // Two's-complement overflow: carry (borrow) into the sign bit differs
        // from the one out of it. The addend is non-negative, so an add can
        // only overflow upward and a subtract only downward.
        let saturated = into_msb != chain;
        if saturated {
            word = match op {
                ColumnOp::Add => self.encode(self.geometry.ps_max()),
                _ => self.encode(self.geometry.ps_min()),
            };
        }
        ColumnResult {
            word: word & self.word_mask(),
            cb_out: chain,
            saturated,
        }
    }
}
