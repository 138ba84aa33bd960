//! Reference models used as oracles.
//!
//! [`direct_conv`], [`dft_naive`] and [`fft_dif_float`] share no code with the
//! hardware models. [`fixed_dif`] reuses the fixed-point primitives on purpose,
//! so that "same quantization" holds by construction, but lays the transform
//! out as a plain in-place loop nest rather than a pipeline schedule.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft_pipeline::{FftConfig, NarrowingPoint, Scaling};
use crate::fixedpoint::{
    add, make_fixed, mul_full, resize, sub, ComplexFixed, FixedWord, Overflow, Rounding,
};

pub type ComplexFloat = Complex64;

/// Full linear convolution in unbounded-enough integers; no length limit.
pub fn direct_conv(x: &[i64], h: &[i64]) -> Vec<i128> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![0i128; x.len() + h.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &hj) in h.iter().enumerate() {
            y[i + j] += xi as i128 * hj as i128;
        }
    }
    y
}

/// `X[k] = sum_n x[n] exp(-j 2 pi n k / N)`, O(N^2).
pub fn dft_naive(frame: &[ComplexFloat]) -> Vec<ComplexFloat> {
    let n = frame.len();
    // exp(-j 2 pi m / N) for m = n*k mod N keeps every angle in [0, 2 pi)
    let roots: Vec<ComplexFloat> = (0..n)
        .map(|m| ComplexFloat::from_polar(1.0, -2.0 * PI * m as f64 / n as f64))
        .collect();
    (0..n)
        .map(|k| {
            frame
                .iter()
                .enumerate()
                .map(|(t, &x)| x * roots[(t * k) % n])
                .sum()
        })
        .collect()
}

/// Recursive radix-2 decimation in frequency, then bit-reversal reordering.
pub fn fft_dif_float(frame: &[ComplexFloat]) -> Result<Vec<ComplexFloat>> {
    let n = frame.len();
    if !n.is_power_of_two() {
        return Err(Error::Length {
            expected: n.next_power_of_two(),
            got: n,
        });
    }
    let mut buf = frame.to_vec();
    dif_split(&mut buf);
    Ok(bit_reversed(&buf))
}

fn dif_split(buf: &mut [ComplexFloat]) {
    let n = buf.len();
    if n < 2 {
        return;
    }
    let half = n / 2;
    let (lo, hi) = buf.split_at_mut(half);
    for (i, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
        let (x, y) = (*a, *b);
        *a = x + y;
        *b = (x - y) * ComplexFloat::from_polar(1.0, -2.0 * PI * i as f64 / n as f64);
    }
    dif_split(lo);
    dif_split(hi);
}

fn bit_reversed<T: Copy>(v: &[T]) -> Vec<T> {
    let bits = v.len().trailing_zeros();
    (0..v.len())
        .map(|k| {
            let mut r = 0;
            for b in 0..bits {
                r |= ((k >> b) & 1) << (bits - 1 - b);
            }
            v[r]
        })
        .collect()
}

/// Behavioral fixed-point DIF with the pipeline's exact quantization sequence.
///
/// Per butterfly: exact `a + b` and `a - b` with one guard bit, the twiddle
/// rotation as four exact products and two exact sums, optional halving,
/// then one narrowing to the internal format. The sorted result is narrowed
/// once more to the sample format.
pub fn fixed_dif(frame: &[ComplexFixed], cfg: &FftConfig) -> Result<Vec<ComplexFixed>> {
    cfg.validate()?;
    let n = cfg.n_points;
    if frame.len() != n {
        return Err(Error::Length {
            expected: n,
            got: frame.len(),
        });
    }
    let ovf = cfg.scaling.overflow();
    let finish = |v: FixedWord| -> FixedWord {
        let v = if cfg.scaling == Scaling::PerStageHalf {
            v.halve()
        } else {
            v
        };
        let v = resize(v, cfg.internal_fmt, ovf, cfg.narrowing);
        if cfg.narrowing_point == NarrowingPoint::EachStage {
            let s = resize(v, cfg.sample_fmt, ovf, cfg.narrowing);
            resize(s, cfg.internal_fmt, ovf, Rounding::Truncate)
        } else {
            v
        }
    };
    let wide_add = |a: FixedWord, b: FixedWord| add(a.grow(1), b.grow(1), Overflow::Wrap);
    let wide_sub = |a: FixedWord, b: FixedWord| sub(a.grow(1), b.grow(1), Overflow::Wrap);

    let mut x: Vec<(FixedWord, FixedWord)> = frame
        .iter()
        .map(|c| {
            if c.fmt() != cfg.sample_fmt {
                return Err(Error::FormatMismatch {
                    left: cfg.sample_fmt,
                    right: c.fmt(),
                });
            }
            let r = |w| resize(w, cfg.internal_fmt, ovf, Rounding::Truncate);
            Ok((r(c.re()), r(c.im())))
        })
        .collect::<Result<_>>()?;

    let mut span = n / 2;
    while span >= 1 {
        let twiddles: Vec<(FixedWord, FixedWord)> = (0..span)
            .map(|k| {
                let theta = PI * k as f64 / span as f64;
                (
                    make_fixed(theta.cos(), cfg.twiddle_fmt, Rounding::NearestEven),
                    make_fixed(-theta.sin(), cfg.twiddle_fmt, Rounding::NearestEven),
                )
            })
            .collect();
        for start in (0..n).step_by(2 * span) {
            for k in 0..span {
                let (ar, ai) = x[start + k];
                let (br, bi) = x[start + k + span];
                let (wr, wi) = twiddles[k];
                let dr = wide_sub(ar, br)?;
                let di = wide_sub(ai, bi)?;
                let pr = wide_sub(mul_full(dr, wr), mul_full(di, wi))?;
                let pi = wide_add(mul_full(dr, wi), mul_full(di, wr))?;
                x[start + k] = (finish(wide_add(ar, br)?), finish(wide_add(ai, bi)?));
                x[start + k + span] = (finish(pr), finish(pi));
            }
        }
        span /= 2;
    }

    bit_reversed(&x)
        .into_iter()
        .map(|(re, im)| {
            ComplexFixed::new(
                resize(re, cfg.sample_fmt, ovf, cfg.narrowing),
                resize(im, cfg.sample_fmt, ovf, cfg.narrowing),
            )
        })
        .collect()
}
