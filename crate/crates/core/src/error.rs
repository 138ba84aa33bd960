use thiserror::Error;

use crate::fixedpoint::Format;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid format: {total_bits} total bits with {frac_bits} fraction bits")]
    InvalidFormat { total_bits: u32, frac_bits: u32 },

    #[error("format mismatch: {left} vs {right}")]
    FormatMismatch { left: Format, right: Format },

    #[error("value {value} out of range [{min}, {max}]")]
    OutOfRange { value: i128, min: i128, max: i128 },

    #[error("invalid slice parameters: {0}")]
    SliceParams(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("length error: expected {expected} samples, got {got}")]
    Length { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reference signal has zero power")]
    DegenerateReference,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
