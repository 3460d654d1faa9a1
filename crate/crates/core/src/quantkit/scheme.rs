use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Partial-sum quantization mode at the crossbar columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsqMode {
    Binary,
    Ternary,
}

impl PsqMode {
    /// Comparators needed per crossbar column.
    pub fn comparators_per_column(self) -> u32 {
        match self {
            PsqMode::Binary => 1,
            PsqMode::Ternary => 2,
        }
    }
}

impl std::fmt::Display for PsqMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PsqMode::Binary => f.write_str("binary"),
            PsqMode::Ternary => f.write_str("ternary"),
        }
    }
}

/// Precisions and quantizer settings shared by every module.
///
/// `alpha` is a raw-integer threshold on column sums and is ignored in binary
/// mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantScheme {
    pub input_bits: u32,
    pub weight_bits: u32,
    pub bit_stream: u32,
    pub bit_slice: u32,
    pub ps_bits: u32,
    pub sf_bits: u32,
    pub mode: PsqMode,
    #[serde(default)]
    pub alpha: i64,
}

impl QuantScheme {
    /// 4-bit inputs/weights/scale factors, 8-bit partial sums.
    pub const fn cifar() -> Self {
        Self {
            input_bits: 4,
            weight_bits: 4,
            bit_stream: 1,
            bit_slice: 1,
            ps_bits: 8,
            sf_bits: 4,
            mode: PsqMode::Ternary,
            alpha: 0,
        }
    }

    /// 3-bit inputs/weights, 8-bit scale factors, 16-bit partial sums.
    pub const fn imagenet() -> Self {
        Self {
            input_bits: 3,
            weight_bits: 3,
            bit_stream: 1,
            bit_slice: 1,
            ps_bits: 16,
            sf_bits: 8,
            mode: PsqMode::Ternary,
            alpha: 0,
        }
    }

    pub fn with_mode(mut self, mode: PsqMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_alpha(mut self, alpha: i64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScheme(msg));
        if self.input_bits == 0 || self.weight_bits == 0 {
            return bad("input_bits and weight_bits must be positive".into());
        }
        if self.bit_stream == 0 || self.input_bits % self.bit_stream != 0 {
            return bad(format!(
                "input_bits {} is not a multiple of bit_stream {}",
                self.input_bits, self.bit_stream
            ));
        }
        if self.bit_slice == 0 || self.weight_bits % self.bit_slice != 0 {
            return bad(format!(
                "weight_bits {} is not a multiple of bit_slice {}",
                self.weight_bits, self.bit_slice
            ));
        }
        if self.input_bits > 16 || self.weight_bits > 16 {
            return bad("input_bits and weight_bits are limited to 16".into());
        }
        if self.ps_bits < 2 || self.ps_bits > 32 {
            return bad(format!("ps_bits {} outside [2, 32]", self.ps_bits));
        }
        // The scale-factor magnitude is zero-extended into the accumulator, so it
        // must stay below the accumulator's sign bit.
        if self.sf_bits == 0 || self.sf_bits >= self.ps_bits {
            return bad(format!(
                "sf_bits {} must be in [1, ps_bits {})",
                self.sf_bits, self.ps_bits
            ));
        }
        if self.mode == PsqMode::Ternary && self.alpha < 0 {
            return bad(format!("ternary alpha {} must be non-negative", self.alpha));
        }
        Ok(())
    }

    /// Bit-stream steps per input, `input_bits / bit_stream`.
    pub fn steps(&self) -> usize {
        (self.input_bits / self.bit_stream) as usize
    }

    pub fn slices_per_weight(&self) -> usize {
        (self.weight_bits / self.bit_slice) as usize
    }

    pub fn ps_min(&self) -> i64 {
        -(1i64 << (self.ps_bits - 1))
    }

    pub fn ps_max(&self) -> i64 {
        (1i64 << (self.ps_bits - 1)) - 1
    }

    pub fn saturate(&self, value: i64) -> (i64, bool) {
        if value > self.ps_max() {
            (self.ps_max(), true)
        } else if value < self.ps_min() {
            (self.ps_min(), true)
        } else {
            (value, false)
        }
    }

    /// Positional weight of bit-stream step `j`.
    pub fn step_weight(&self, step: usize) -> i64 {
        1i64 << (step as u32 * self.bit_stream)
    }

    /// Significance of weight slice `k` (LSB first). With single-bit slices the
    /// MSB carries the negative two's-complement weight.
    pub fn slice_significance(&self, slice: usize) -> i64 {
        let last = self.slices_per_weight() - 1;
        let shift = slice as u32 * self.bit_slice;
        if slice == last && self.bit_slice == 1 {
            -(1i64 << shift)
        } else {
            1i64 << shift
        }
    }
}

impl Default for QuantScheme {
    fn default() -> Self {
        Self::cifar()
    }
}
