//! Desk-scale calibration of the ternary threshold and the per-(step, column)
//! scale factors from observed column sums.

use serde::{Deserialize, Serialize};

use super::fixed::{layer_exponent, quantize_scale_factor, FixedPoint};
use super::psq::TernaryCode;
use crate::{Error, Result};

/// Default fraction of column sums that should fall inside the ternary dead
/// zone.
pub const DEFAULT_ZERO_FRACTION: f64 = 0.5;

/// Threshold such that at least `ceil(target * n)` of the samples satisfy
/// `|ps| < alpha`, i.e. quantize to zero. Returns the smallest such integer.
///
/// All-zero samples carry no magnitude information and yield `alpha = 0`, as
/// does a zero target.
pub fn calibrate_alpha(column_sums: &[i64], target_zero_fraction: f64) -> Result<i64> {
    if column_sums.is_empty() {
        return Err(Error::NoCalibrationData);
    }
    let target = target_zero_fraction.clamp(0.0, 1.0);
    let mut magnitudes: Vec<i64> = column_sums.iter().map(|v| v.abs()).collect();
    magnitudes.sort_unstable();
    let n = magnitudes.len();
    let needed = (target * n as f64).ceil() as usize;
    if needed == 0 || magnitudes[n - 1] == 0 {
        return Ok(0);
    }
    // |ps| < alpha must hold for the `needed` smallest magnitudes.
    Ok(magnitudes[needed.min(n) - 1] + 1)
}

/// Scale factors for one crossbar tile, indexed by (bit-stream step, physical
/// column), sharing one exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactorSet {
    steps: usize,
    columns: usize,
    sf_bits: u32,
    exponent: i32,
    entries: Vec<FixedPoint>,
}

impl ScaleFactorSet {
    pub fn zeros(steps: usize, columns: usize, sf_bits: u32) -> Self {
        Self {
            steps,
            columns,
            sf_bits,
            exponent: 0,
            entries: vec![FixedPoint::ZERO; steps * columns],
        }
    }

    /// Build from signed integer magnitudes (row-major by step).
    pub fn from_signed(
        steps: usize,
        columns: usize,
        sf_bits: u32,
        exponent: i32,
        values: &[i64],
    ) -> Result<Self> {
        if values.len() != steps * columns {
            return Err(Error::DimensionMismatch(format!(
                "{} scale factors for a {steps}x{columns} set",
                values.len()
            )));
        }
        let limit = 1u64 << sf_bits;
        let entries = values
            .iter()
            .map(|&v| {
                let magnitude = v.unsigned_abs();
                if magnitude >= limit {
                    Err(Error::DimensionMismatch(format!(
                        "scale factor {v} exceeds {sf_bits}-bit magnitude"
                    )))
                } else {
                    Ok(FixedPoint {
                        negative: v < 0,
                        magnitude,
                        exponent,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            steps,
            columns,
            sf_bits,
            exponent,
            entries,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn sf_bits(&self) -> u32 {
        self.sf_bits
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    /// Number of stored scale factors, `steps * columns`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, step: usize, column: usize) -> FixedPoint {
        self.entries[step * self.columns + column]
    }

    /// Signed integer value in units of `2^exponent`.
    pub fn signed(&self, step: usize, column: usize) -> i64 {
        self.get(step, column).signed_magnitude()
    }
}

/// Running sums for the closed-form least-squares fit
/// `s = sum(p * ps) / sum(p^2)` per (step, column).
#[derive(Debug, Clone)]
pub struct ScaleFit {
    steps: usize,
    columns: usize,
    sum_p_ps: Vec<i128>,
    sum_p_sq: Vec<u64>,
}

impl ScaleFit {
    pub fn new(steps: usize, columns: usize) -> Self {
        Self {
            steps,
            columns,
            sum_p_ps: vec![0; steps * columns],
            sum_p_sq: vec![0; steps * columns],
        }
    }

    pub fn push(&mut self, step: usize, column: usize, ps: i64, p: TernaryCode) {
        let i = step * self.columns + column;
        let p = p.value();
        self.sum_p_ps[i] += (p * ps) as i128;
        self.sum_p_sq[i] += (p * p) as u64;
    }

    /// Real-valued fit and the number of entries that saw only `p = 0`.
    pub fn solve(&self) -> (Vec<f64>, usize) {
        let mut degenerate = 0;
        let values = self
            .sum_p_ps
            .iter()
            .zip(&self.sum_p_sq)
            .map(|(&num, &den)| {
                if den == 0 {
                    degenerate += 1;
                    0.0
                } else {
                    num as f64 / den as f64
                }
            })
            .collect();
        (values, degenerate)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn columns(&self) -> usize {
        self.columns
    }
}

#[derive(Debug, Clone)]
pub struct ScaleCalibration {
    pub set: ScaleFactorSet,
    pub real: Vec<f64>,
    /// Entries with no non-zero `p` sample; stored as zero.
    pub degenerate_entries: usize,
    pub saturated_entries: usize,
}

/// Quantize a real-valued grid with a given shared exponent.
pub fn quantize_grid(
    real: &[f64],
    steps: usize,
    columns: usize,
    sf_bits: u32,
    exponent: i32,
) -> (ScaleFactorSet, usize) {
    let mut saturated = 0;
    let entries = real
        .iter()
        .map(|&s| {
            let q = quantize_scale_factor(s, sf_bits, exponent);
            saturated += q.saturated as usize;
            q.value
        })
        .collect();
    (
        ScaleFactorSet {
            steps,
            columns,
            sf_bits,
            exponent,
            entries,
        },
        saturated,
    )
}

/// Fit and quantize using the smallest exponent that represents the largest
/// fitted magnitude of this set.
pub fn calibrate_scale_factors(fit: &ScaleFit, sf_bits: u32) -> ScaleCalibration {
    let (real, degenerate_entries) = fit.solve();
    let max_abs = real.iter().fold(0f64, |m, v| m.max(v.abs()));
    let exponent = layer_exponent(max_abs, sf_bits);
    let (set, saturated_entries) = quantize_grid(&real, fit.steps, fit.columns, sf_bits, exponent);
    ScaleCalibration {
        set,
        real,
        degenerate_entries,
        saturated_entries,
    }
}
