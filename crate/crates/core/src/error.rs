use thiserror::Error;

/// Errors from CSD encoding and parsing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsdError {
    #[error("value {0} is outside the INT8 range [-128, 127]")]
    OutOfRange(i32),
    #[error("digit {0} is not one of -1, 0, 1")]
    InvalidDigit(i8),
    #[error("sign bit {0} is not 0 or 1")]
    InvalidSignBit(u8),
    #[error("digits {position} and {} are both non-zero", position + 1)]
    AdjacentNonZero { position: usize },
    #[error("malformed CSD word text")]
    Parse,
}

/// Errors raised anywhere in the quantize, compile, simulate and report pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Csd(#[from] CsdError),

    #[error("argument error: {0}")]
    Argument(&'static str),
    #[error("phi value {0} in profile is outside [0, 4]")]
    PhiOutOfRange(u8),
    #[error("threshold {0} is outside [0, 2]")]
    ThresholdOutOfRange(u8),
    #[error("query table is empty")]
    EmptyTable,
    #[error("filter {filter_id} has no weights")]
    EmptyFilter { filter_id: usize },

    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("shape error: {what} expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("capacity error: {what} needs {required}, limit is {limit}")]
    Capacity {
        what: &'static str,
        required: usize,
        limit: usize,
    },
    #[error(
        "filter {filter_id} weight {position} has phi {phi}, above the filter threshold {phi_th}"
    )]
    ThresholdViolation {
        filter_id: usize,
        position: usize,
        phi: u8,
        phi_th: u8,
    },
    #[error("input {value} at position {position} is outside the {range} range")]
    InputOutOfRange {
        position: usize,
        value: i32,
        range: &'static str,
    },
    #[error("compiled layer is inconsistent: {0}")]
    InvalidLayer(&'static str),
    #[error("layer sets differ: {0}")]
    MismatchedLayers(&'static str),
}
