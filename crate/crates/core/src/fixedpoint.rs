//! Width-parametric signed two's-complement fixed-point arithmetic.
//!
//! Every word carries its [`Format`] (total bits, fraction bits). Raw counts are
//! held in an `i128` so that exact intermediate products of two user-facing
//! words (at most 48 bits each) never lose information.

use std::fmt;

use crate::error::{Error, Result};

/// Widest format accepted from callers.
pub const MAX_TOTAL_BITS: u32 = 48;

/// Widest format an exact intermediate (products, sums of products) may use.
const MAX_WIDE_BITS: u32 = 126;

/// Fixed-point format: `total_bits` including sign, `frac_bits` after the binary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Format {
    total_bits: u32,
    frac_bits: u32,
}

impl Format {
    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self> {
        if !(2..=MAX_TOTAL_BITS).contains(&total_bits) || frac_bits >= total_bits {
            return Err(Error::InvalidFormat {
                total_bits,
                frac_bits,
            });
        }
        Ok(Self {
            total_bits,
            frac_bits,
        })
    }

    /// Intermediate format for exact arithmetic; allowed to exceed [`MAX_TOTAL_BITS`].
    pub(crate) fn wide(total_bits: u32, frac_bits: u32) -> Self {
        assert!(
            (2..=MAX_WIDE_BITS).contains(&total_bits) && frac_bits < total_bits,
            "intermediate format {total_bits}/{frac_bits} out of range"
        );
        Self {
            total_bits,
            frac_bits,
        }
    }

    /// Q1.11, the 12-bit sample format.
    pub const Q1_11: Format = Format {
        total_bits: 12,
        frac_bits: 11,
    };

    /// Q2.22, the 24-bit twiddle and datapath format.
    pub const Q2_22: Format = Format {
        total_bits: 24,
        frac_bits: 22,
    };

    /// 16-bit integer format used by the multiplier and convolution engine.
    pub const INT16: Format = Format {
        total_bits: 16,
        frac_bits: 0,
    };

    pub fn total_bits(self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    pub fn int_bits(self) -> u32 {
        self.total_bits - self.frac_bits
    }

    pub fn min_raw(self) -> i128 {
        -(1i128 << (self.total_bits - 1))
    }

    pub fn max_raw(self) -> i128 {
        (1i128 << (self.total_bits - 1)) - 1
    }

    pub fn contains(self, raw: i128) -> bool {
        raw >= self.min_raw() && raw <= self.max_raw()
    }

    /// Real value of one LSB.
    pub fn lsb(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    /// Same fraction bits, `extra` more integer bits. Exact for any value.
    pub(crate) fn grow(self, extra: u32) -> Self {
        Self::wide(self.total_bits + extra, self.frac_bits)
    }

    /// Reinterpret the raw count with one more fraction bit, i.e. divide by two exactly.
    pub(crate) fn halve(self) -> Self {
        Self::wide(self.total_bits, self.frac_bits + 1)
    }

    /// Reduce `raw` into range under `overflow`. Returns the value and whether it was clipped.
    pub fn apply_overflow(self, raw: i128, overflow: Overflow) -> (i128, bool) {
        if self.contains(raw) {
            return (raw, false);
        }
        match overflow {
            Overflow::Saturate => (raw.clamp(self.min_raw(), self.max_raw()), true),
            Overflow::Wrap => (wrap_to(raw, self.total_bits), true),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits(), self.frac_bits)
    }
}

/// Rounding applied when fraction bits are dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Rounding {
    /// Arithmetic shift right, i.e. round toward negative infinity.
    #[default]
    Truncate,
    /// Round half to even.
    NearestEven,
}

/// What happens to a result that does not fit the destination format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Overflow {
    #[default]
    Saturate,
    /// Two's-complement wraparound modulo `2^total_bits`.
    Wrap,
}

/// Sign-interpret the low `bits` bits of `raw`.
pub(crate) fn wrap_to(raw: i128, bits: u32) -> i128 {
    let shift = 128 - bits;
    (raw << shift) >> shift
}

/// Divide by `2^shift` and round per `rounding`.
pub(crate) fn shr_round(raw: i128, shift: u32, rounding: Rounding) -> i128 {
    if shift == 0 {
        return raw;
    }
    let floor = raw >> shift;
    match rounding {
        Rounding::Truncate => floor,
        Rounding::NearestEven => {
            let rem = raw - (floor << shift);
            let half = 1i128 << (shift - 1);
            if rem > half || (rem == half && floor & 1 == 1) {
                floor + 1
            } else {
                floor
            }
        }
    }
}

/// A signed fixed-point scalar. The raw count always lies within its format's range.
///
/// Equality compares value and format only; the saturation flag is informational.
#[derive(Clone, Copy, Debug)]
pub struct FixedWord {
    raw: i128,
    fmt: Format,
    saturated: bool,
}

impl PartialEq for FixedWord {
    fn eq(&self, other: &Self) -> bool {
        self.raw == other.raw && self.fmt == other.fmt
    }
}

impl Eq for FixedWord {}

impl FixedWord {
    pub fn from_raw(raw: i128, fmt: Format) -> Result<Self> {
        if !fmt.contains(raw) {
            return Err(Error::OutOfRange {
                value: raw,
                min: fmt.min_raw(),
                max: fmt.max_raw(),
            });
        }
        Ok(Self {
            raw,
            fmt,
            saturated: false,
        })
    }

    /// Build from an arbitrary raw count, reducing it into range per `overflow`.
    pub fn from_raw_with(raw: i128, fmt: Format, overflow: Overflow) -> Self {
        let (raw, saturated) = fmt.apply_overflow(raw, overflow);
        Self {
            raw,
            fmt,
            saturated,
        }
    }

    pub fn zero(fmt: Format) -> Self {
        Self {
            raw: 0,
            fmt,
            saturated: false,
        }
    }

    pub fn raw(self) -> i128 {
        self.raw
    }

    pub fn fmt(self) -> Format {
        self.fmt
    }

    /// True when the value was clipped or wrapped on its way into this format.
    pub fn saturated(self) -> bool {
        self.saturated
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 * self.fmt.lsb()
    }

    /// Exact widening to a format with `extra` more integer bits.
    pub(crate) fn grow(self, extra: u32) -> Self {
        Self {
            fmt: self.fmt.grow(extra),
            ..self
        }
    }

    /// Exact division by two (one more fraction bit, same raw count).
    pub(crate) fn halve(self) -> Self {
        Self {
            fmt: self.fmt.halve(),
            ..self
        }
    }
}

impl fmt::Display for FixedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.raw, self.fmt)
    }
}

/// Quantize a real value. Saturates silently; check [`FixedWord::saturated`].
///
/// `f64` values are exact binary rationals and scaling by `2^frac_bits` is exact,
/// so the only rounding is the one requested. NaN maps to zero.
pub fn make_fixed(value: f64, fmt: Format, rounding: Rounding) -> FixedWord {
    let scaled = value * (fmt.frac_bits as f64).exp2();
    let rounded = match rounding {
        Rounding::Truncate => scaled.floor(),
        Rounding::NearestEven => scaled.round_ties_even(),
    };
    // `as` saturates at the i128 bounds, which lie far outside any format.
    FixedWord::from_raw_with(rounded as i128, fmt, Overflow::Saturate)
}

/// Rescale into `new_fmt`. Widening the fraction is exact; narrowing drops LSBs per `narrowing`.
pub fn resize(x: FixedWord, new_fmt: Format, overflow: Overflow, narrowing: Rounding) -> FixedWord {
    let old = x.fmt.frac_bits;
    let new = new_fmt.frac_bits;
    let raw = if new >= old {
        // Left shift can only overflow i128 when the value is far out of range anyway.
        x.raw
            .checked_shl(new - old)
            .filter(|v| v >> (new - old) == x.raw)
            .unwrap_or(if x.raw < 0 { i128::MIN } else { i128::MAX })
    } else {
        shr_round(x.raw, old - new, narrowing)
    };
    FixedWord::from_raw_with(raw, new_fmt, overflow)
}

fn same_fmt(a: FixedWord, b: FixedWord) -> Result<()> {
    if a.fmt != b.fmt {
        return Err(Error::FormatMismatch {
            left: a.fmt,
            right: b.fmt,
        });
    }
    Ok(())
}

pub fn add(a: FixedWord, b: FixedWord, overflow: Overflow) -> Result<FixedWord> {
    same_fmt(a, b)?;
    Ok(FixedWord::from_raw_with(a.raw + b.raw, a.fmt, overflow))
}

pub fn sub(a: FixedWord, b: FixedWord, overflow: Overflow) -> Result<FixedWord> {
    same_fmt(a, b)?;
    Ok(FixedWord::from_raw_with(a.raw - b.raw, a.fmt, overflow))
}

/// Exact product in format `{a.total + b.total, a.frac + b.frac}`.
///
/// Panics if the combined width exceeds the 126-bit intermediate limit.
pub fn mul_full(a: FixedWord, b: FixedWord) -> FixedWord {
    let fmt = Format::wide(
        a.fmt.total_bits + b.fmt.total_bits,
        a.fmt.frac_bits + b.fmt.frac_bits,
    );
    FixedWord {
        raw: a.raw * b.raw,
        fmt,
        saturated: false,
    }
}

/// Complex value with real and imaginary parts in one shared format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexFixed {
    re: FixedWord,
    im: FixedWord,
}

impl ComplexFixed {
    pub fn new(re: FixedWord, im: FixedWord) -> Result<Self> {
        same_fmt(re, im)?;
        Ok(Self { re, im })
    }

    pub fn from_raw(re: i128, im: i128, fmt: Format) -> Result<Self> {
        Ok(Self {
            re: FixedWord::from_raw(re, fmt)?,
            im: FixedWord::from_raw(im, fmt)?,
        })
    }

    pub fn zero(fmt: Format) -> Self {
        Self {
            re: FixedWord::zero(fmt),
            im: FixedWord::zero(fmt),
        }
    }

    pub fn from_f64(re: f64, im: f64, fmt: Format, rounding: Rounding) -> Self {
        Self {
            re: make_fixed(re, fmt, rounding),
            im: make_fixed(im, fmt, rounding),
        }
    }

    pub fn re(self) -> FixedWord {
        self.re
    }

    pub fn im(self) -> FixedWord {
        self.im
    }

    pub fn fmt(self) -> Format {
        self.re.fmt
    }

    pub fn to_f64(self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn resize(self, fmt: Format, overflow: Overflow, narrowing: Rounding) -> Self {
        Self {
            re: resize(self.re, fmt, overflow, narrowing),
            im: resize(self.im, fmt, overflow, narrowing),
        }
    }

    pub(crate) fn from_parts_unchecked(re: FixedWord, im: FixedWord) -> Self {
        debug_assert_eq!(re.fmt, im.fmt);
        Self { re, im }
    }
}
