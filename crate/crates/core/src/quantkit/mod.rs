//! Fixed-point and partial-sum quantization primitives, calibration, and the
//! golden software reference.

mod calibrate;
mod fixed;
mod golden;
mod psq;
mod scheme;

pub use calibrate::{
    calibrate_alpha, calibrate_scale_factors, quantize_grid, ScaleCalibration, ScaleFactorSet, ScaleFit,
    DEFAULT_ZERO_FRACTION,
};
pub use fixed::{layer_exponent, quantize_scale_factor, requantize_activation, FixedPoint, Quantized};
pub use golden::{
    combine_slices, golden_ideal_tile, golden_psq_layer, golden_psq_tile, golden_psq_trace, GoldenTile,
};
pub use psq::{quantize_partial_sum, TernaryCode};
pub use scheme::{PsqMode, QuantScheme};
