//! Bit-exact software models of three fixed-point DSP hardware blocks:
//!
//! - [`bsm`]: a bit-slicing multiplier built from 4x4-bit lookup tables,
//! - [`conv_engine`]: a streaming linear-convolution engine with a 32-entry
//!   accumulating register file,
//! - [`fft_pipeline`]: a cycle-level radix-2 single-path delay feedback (SDF)
//!   decimation-in-frequency FFT.
//!
//! [`golden_models`] holds the independent oracles the hardware models are
//! checked against, and [`metrics`] measures truncation noise as SNR.

pub mod bsm;
pub mod conv_engine;
pub mod error;
pub mod fft_pipeline;
pub mod fixedpoint;
pub mod formats;
pub mod golden_models;
pub mod metrics;

pub use error::{Error, Result};
pub use fixedpoint::{ComplexFixed, FixedWord, Format, Overflow, Rounding};
