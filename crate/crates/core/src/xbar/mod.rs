//! Noise-free functional model of the analog crossbar: bit-sliced weight
//! storage, bit-streamed inputs, integer column sums, column comparators, and
//! the ideal ADC used by the baseline.

mod adc;
mod comparator;
mod slicing;
mod stream;

pub use adc::ideal_adc;
pub use comparator::{compare, ComparatorBank, Comparison};
pub use slicing::{slice_weights, BitSlicedWeights, TileGrid};
pub use stream::{column_sums, stream_input, BitStreamPlan};
