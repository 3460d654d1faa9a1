//! Bit-exact model of the digital CiM array that accumulates scaled partial
//! sums, with event counters and a cycle model.

mod array;
mod counters;
mod gates;
mod timing;

pub use array::{ColumnOp, DcimArray, DcimGeometry};
pub use counters::EventCounters;
pub use gates::{
    bitwise_read, borrow_reference, full_add_bit, full_sub_bit, AddFn, BitLines, GateFault, Gates, SubFn,
};
pub use timing::{timing_model, Timing, TimingParams};
