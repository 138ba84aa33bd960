//! Bit-slicing multiplier.
//!
//! A `B`-bit unsigned operand is cut into `t` slices of `p` bits. Every pair of
//! slices `(X_i, Y_k)` is multiplied by its own lookup table, and the shifted
//! partial products `lut(X_i, Y_k) << p*(i+k)` are summed into the exact
//! product. With `B = 16, p = 4, t = 4` there are 16 tables of 256 entries.
//!
//! Signed operands go through a sign-magnitude wrapper so the table contents
//! stay plain unsigned products.

use std::fmt;

use crate::error::{Error, Result};
use crate::fixedpoint::{FixedWord, Format};

/// Largest slice width; a table has `2^(2p)` entries.
pub const MAX_SLICE_BITS: u32 = 8;

/// Operand width, slice width and slice count. Always `operand_bits == slice_bits * slice_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SliceParams {
    operand_bits: u32,
    slice_bits: u32,
    slice_count: u32,
}

impl SliceParams {
    /// 16-bit operands in four 4-bit slices.
    pub const DEFAULT_16X4: SliceParams = SliceParams {
        operand_bits: 16,
        slice_bits: 4,
        slice_count: 4,
    };

    pub fn new(operand_bits: u32, slice_bits: u32, slice_count: u32) -> Result<Self> {
        if slice_bits == 0 || slice_count == 0 {
            return Err(Error::SliceParams(
                "slice width and count must be positive".into(),
            ));
        }
        if slice_bits * slice_count != operand_bits {
            return Err(Error::SliceParams(format!(
                "{operand_bits} bits cannot be cut into {slice_count} slices of {slice_bits}"
            )));
        }
        // The full product must fit a u128.
        if operand_bits > 64 {
            return Err(Error::SliceParams(format!(
                "operand width {operand_bits} exceeds 64 bits"
            )));
        }
        Ok(Self {
            operand_bits,
            slice_bits,
            slice_count,
        })
    }

    pub fn operand_bits(self) -> u32 {
        self.operand_bits
    }

    pub fn slice_bits(self) -> u32 {
        self.slice_bits
    }

    pub fn slice_count(self) -> u32 {
        self.slice_count
    }

    fn check_operand(self, x: u128) -> Result<()> {
        if x >> self.operand_bits != 0 {
            return Err(Error::OutOfRange {
                value: x as i128,
                min: 0,
                max: (1i128 << self.operand_bits) - 1,
            });
        }
        Ok(())
    }
}

/// Little-endian `p`-bit slices of one operand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceVector {
    slices: Vec<u32>,
    params: SliceParams,
}

impl SliceVector {
    pub fn slices(&self) -> &[u32] {
        &self.slices
    }

    pub fn params(&self) -> SliceParams {
        self.params
    }

    pub fn reassemble(&self) -> u128 {
        self.slices
            .iter()
            .enumerate()
            .map(|(k, &s)| (s as u128) << (self.params.slice_bits * k as u32))
            .sum()
    }
}

pub fn slice(x: u128, params: SliceParams) -> Result<SliceVector> {
    params.check_operand(x)?;
    let mask = (1u128 << params.slice_bits) - 1;
    let slices = (0..params.slice_count)
        .map(|k| ((x >> (params.slice_bits * k)) & mask) as u32)
        .collect();
    Ok(SliceVector { slices, params })
}

/// `t * t` lookup tables, one per slice pair, each holding every `p x p` bit product.
///
/// Tables are populated eagerly and never change, so a bank can be shared freely.
#[derive(Clone, Debug)]
pub struct LutBank {
    params: SliceParams,
    // tables[i * t + k][(a << p) | b] == a * b
    tables: Vec<Box<[u16]>>,
}

impl LutBank {
    pub fn new(params: SliceParams) -> Result<Self> {
        if params.slice_bits > MAX_SLICE_BITS {
            return Err(Error::SliceParams(format!(
                "slice width {} exceeds {MAX_SLICE_BITS} bits",
                params.slice_bits
            )));
        }
        let p = params.slice_bits;
        let side = 1u32 << p;
        let count = (params.slice_count * params.slice_count) as usize;
        let tables = (0..count)
            .map(|_| {
                (0..side * side)
                    .map(|idx| ((idx >> p) * (idx & (side - 1))) as u16)
                    .collect()
            })
            .collect();
        Ok(Self { params, tables })
    }

    pub fn params(&self) -> SliceParams {
        self.params
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    /// Entry `(a, b)` of the table that serves slice pair `(i, k)`.
    pub fn lookup(&self, i: usize, k: usize, a: u32, b: u32) -> u32 {
        let t = self.params.slice_count as usize;
        self.tables[i * t + k][((a << self.params.slice_bits) | b) as usize] as u32
    }

    /// Unsigned product without keeping the partial-product matrix.
    pub fn multiply(&self, x: u128, y: u128) -> Result<u128> {
        self.params.check_operand(x)?;
        self.params.check_operand(y)?;
        let mut acc = 0u128;
        self.for_each_partial(x, y, |_, _, pp| acc += pp);
        Ok(acc)
    }

    fn for_each_partial(&self, x: u128, y: u128, mut sink: impl FnMut(usize, usize, u128)) {
        let p = self.params.slice_bits;
        let t = self.params.slice_count as usize;
        let mask = (1u128 << p) - 1;
        for i in 0..t {
            let xi = ((x >> (p * i as u32)) & mask) as u32;
            for k in 0..t {
                let yk = ((y >> (p * k as u32)) & mask) as u32;
                let pp = (self.lookup(i, k, xi, yk) as u128) << (p * (i + k) as u32);
                sink(i, k, pp);
            }
        }
    }
}

/// Exact product plus the shifted partial products that formed it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BsmProduct {
    value: u128,
    slice_count: usize,
    partials: Vec<u128>,
}

impl BsmProduct {
    pub fn value(&self) -> u128 {
        self.value
    }

    /// Row-major `t x t`; entry `[i][k]` is `lut(X_i, Y_k) << p*(i+k)`.
    pub fn partials(&self) -> &[u128] {
        &self.partials
    }

    pub fn partial(&self, i: usize, k: usize) -> u128 {
        self.partials[i * self.slice_count + k]
    }

    pub fn slice_count(&self) -> usize {
        self.slice_count
    }
}

impl fmt::Display for BsmProduct {
    /// Partial-product matrix as hex, one row per multiplicand slice.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.partials.chunks(self.slice_count) {
            let cells: Vec<String> = row.iter().map(|pp| format!("{pp:#x}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        write!(f, "sum {:#x}", self.value)
    }
}

pub fn bsm_mul_unsigned(x: u128, y: u128, bank: &LutBank) -> Result<BsmProduct> {
    bank.params.check_operand(x)?;
    bank.params.check_operand(y)?;
    let t = bank.params.slice_count as usize;
    let mut partials = vec![0u128; t * t];
    bank.for_each_partial(x, y, |i, k, pp| partials[i * t + k] = pp);
    let value = partials.iter().sum();
    Ok(BsmProduct {
        value,
        slice_count: t,
        partials,
    })
}

/// Signed product of two 16-bit words via sign-magnitude around the unsigned core.
///
/// `|-32768| = 0x8000` still fits the 16-bit unsigned operand range, so the
/// whole signed range is covered. Result format is `{32, f + g}`.
pub fn bsm_mul_signed(x: FixedWord, y: FixedWord, bank: &LutBank) -> Result<FixedWord> {
    let b = bank.params.operand_bits;
    for w in [x, y] {
        if w.fmt().total_bits() != b {
            return Err(Error::SliceParams(format!(
                "operand format {} does not match {b}-bit bank",
                w.fmt()
            )));
        }
    }
    let mag = bank.multiply(x.raw().unsigned_abs(), y.raw().unsigned_abs())? as i128;
    let raw = if (x.raw() < 0) != (y.raw() < 0) {
        -mag
    } else {
        mag
    };
    let fmt = Format::new(2 * b, x.fmt().frac_bits() + y.fmt().frac_bits())?;
    FixedWord::from_raw(raw, fmt)
}

/// Exact signed product of words of any width, built from `B`-bit BSM calls on magnitude limbs.
///
/// Produces the same value and format as [`crate::fixedpoint::mul_full`].
pub fn bsm_mul_wide(x: FixedWord, y: FixedWord, bank: &LutBank) -> FixedWord {
    let b = bank.params.operand_bits;
    let mask = (1u128 << b) - 1;
    let limbs = |mut v: u128| {
        let mut out = Vec::new();
        while v != 0 {
            out.push(v & mask);
            v >>= b;
        }
        out
    };
    let xs = limbs(x.raw().unsigned_abs());
    let ys = limbs(y.raw().unsigned_abs());
    let mut mag = 0u128;
    for (i, &xl) in xs.iter().enumerate() {
        for (k, &yl) in ys.iter().enumerate() {
            let pp = bank
                .multiply(xl, yl)
                .expect("limbs are masked to the operand width");
            mag += pp << (b as usize * (i + k));
        }
    }
    let raw = if (x.raw() < 0) != (y.raw() < 0) {
        -(mag as i128)
    } else {
        mag as i128
    };
    let fmt = Format::wide(
        x.fmt().total_bits() + y.fmt().total_bits(),
        x.fmt().frac_bits() + y.fmt().frac_bits(),
    );
    FixedWord::from_raw(raw, fmt).expect("exact product always fits")
}
