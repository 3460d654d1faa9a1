use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quantization scheme: {0}")]
    InvalidScheme(String),

    #[error("no calibration data")]
    NoCalibrationData,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("weight {value} at (row {row}, col {col}) does not fit in {bits}-bit two's complement")]
    WeightOutOfRange {
        row: usize,
        col: usize,
        value: i64,
        bits: u32,
    },

    #[error("negative weight {value} at (row {row}, col {col}) needs bit_slice = 1 (got {bit_slice})")]
    SignedMultiBitSlice {
        row: usize,
        col: usize,
        value: i64,
        bit_slice: u32,
    },

    #[error("input {value} at index {index} does not fit in {bits} bits")]
    InputOutOfRange { index: usize, value: u64, bits: u32 },

    #[error("invalid ternary code pattern {0:#04b}")]
    InvalidCode(u8),

    #[error("layer `{layer}`: {reason}")]
    InvalidLayer { layer: String, reason: String },

    #[error("unknown cost entry `{0}`")]
    UnknownCostEntry(String),

    #[error("invalid cost table: {0}")]
    InvalidCostTable(String),

    #[error("parse error in {source_name}: {message}")]
    Parse {
        source_name: String,
        message: String,
    },

    #[error(
        "oracle mismatch at layer {layer}, tile ({row_tile},{col_tile}), column {column}, step {step}, input {input}: hardware {hardware} != golden {golden}"
    )]
    OracleMismatch {
        layer: usize,
        row_tile: usize,
        col_tile: usize,
        column: usize,
        step: usize,
        input: usize,
        hardware: i64,
        golden: i64,
    },

    #[error(
        "row-tile reduction mismatch at layer {layer}, input {input}, output column {column}: hardware {hardware} != golden {golden}"
    )]
    ReductionMismatch {
        layer: usize,
        input: usize,
        column: usize,
        hardware: i64,
        golden: i64,
    },

    #[error("normalization reference has zero {0}")]
    ZeroReference(&'static str),

    #[error("{0}")]
    Config(String),
}
