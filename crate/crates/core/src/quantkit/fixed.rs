use serde::{Deserialize, Serialize};

/// Sign-magnitude fixed-point value: `sign * magnitude * 2^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPoint {
    pub negative: bool,
    pub magnitude: u64,
    pub exponent: i32,
}

impl FixedPoint {
    pub const ZERO: FixedPoint = FixedPoint {
        negative: false,
        magnitude: 0,
        exponent: 0,
    };

    pub fn sign(&self) -> i64 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    /// `sign * magnitude`, the integer the hardware actually adds.
    pub fn signed_magnitude(&self) -> i64 {
        self.sign() * self.magnitude as i64
    }

    pub fn to_f64(&self) -> f64 {
        self.signed_magnitude() as f64 * 2f64.powi(self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantized {
    pub value: FixedPoint,
    pub saturated: bool,
}

/// Round `|s| / 2^exponent` to nearest (ties away from zero) and clamp to
/// `2^bits - 1`.
pub fn quantize_scale_factor(s: f64, bits: u32, exponent: i32) -> Quantized {
    assert!((1..=62).contains(&bits), "fixed-point width {bits} unsupported");
    let max = (1u64 << bits) - 1;
    let scaled = (s.abs() / 2f64.powi(exponent)).round();
    let (magnitude, saturated) = if !scaled.is_finite() || scaled > max as f64 {
        (max, true)
    } else {
        (scaled as u64, false)
    };
    Quantized {
        value: FixedPoint {
            negative: s < 0.0 && magnitude != 0,
            magnitude,
            exponent,
        },
        saturated,
    }
}

/// Smallest shared exponent for which `max_abs` rounds to a representable
/// magnitude.
pub fn layer_exponent(max_abs: f64, bits: u32) -> i32 {
    let max_abs = max_abs.abs();
    if max_abs == 0.0 || !max_abs.is_finite() {
        return 0;
    }
    let limit = ((1u64 << bits) - 1) as f64;
    // Start one below the analytic estimate and walk up; rounding can push a
    // value just under the limit over it.
    let mut e = (max_abs / limit).log2().floor() as i32 - 1;
    while (max_abs / 2f64.powi(e)).round() > limit {
        e += 1;
    }
    e
}

/// Output activation from a widened accumulator: `round(acc * scale)` clamped
/// to `[0, 2^out_bits - 1]`. The lower clamp is the folded ReLU. Rounding is
/// half-up and exact in integer arithmetic.
pub fn requantize_activation(acc: i64, out_bits: u32, scale: FixedPoint) -> u64 {
    assert!((1..63).contains(&out_bits));
    let top = (1i128 << out_bits) - 1;
    let product = acc as i128 * scale.signed_magnitude() as i128;
    let value = if scale.exponent >= 0 {
        product << scale.exponent.min(64)
    } else {
        let shift = (-scale.exponent).min(126) as u32;
        (product + (1i128 << (shift - 1))) >> shift
    };
    value.clamp(0, top) as u64
}
