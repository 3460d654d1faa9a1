//! Functional simulator and analytical cost estimator for an ADC-less hybrid
//! analog/digital compute-in-memory macro.
//!
//! The analog crossbar ([`xbar`]) produces integer column sums per input bit
//! stream; comparators reduce them to binary or ternary codes; a digital CiM
//! array ([`dcim`]) accumulates signed scale factors in memory using bit-line
//! OR/NAND reads and a carry/borrow column peripheral. [`quantkit`] holds the
//! quantizers, calibration and the golden software reference, [`costmodel`]
//! turns event counts into energy/latency/area, and [`mapper`] tiles DNN
//! layers onto crossbars and drives both paths end to end.

pub mod costmodel;
pub mod dcim;
pub mod error;
pub mod mapper;
pub mod quantkit;
pub mod selftest;
pub mod xbar;

pub use error::{Error, Result};
