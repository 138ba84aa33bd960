use bitslice_dsp::fft_pipeline::{
    butterfly, FftConfig, FftPipeline, Multiplier, NarrowingPoint, Scaling,
};
use bitslice_dsp::fixedpoint::{ComplexFixed, Format, Rounding};
use bitslice_dsp::golden_models::{dft_naive, fixed_dif, ComplexFloat};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_frame(rng: &mut ChaCha8Rng, n: usize, fmt: Format, max: i128) -> Vec<ComplexFixed> {
    (0..n)
        .map(|_| {
            ComplexFixed::from_raw(
                rng.gen_range(-max..=max)
                    .clamp(fmt.min_raw(), fmt.max_raw()),
                rng.gen_range(-max..=max)
                    .clamp(fmt.min_raw(), fmt.max_raw()),
                fmt,
            )
            .unwrap()
        })
        .collect()
}

fn all_configs(n: usize) -> Vec<FftConfig> {
    let mut out = Vec::new();
    for scaling in [Scaling::PerStageHalf, Scaling::NoneWrap] {
        for narrowing in [Rounding::Truncate, Rounding::NearestEven] {
            for narrowing_point in [NarrowingPoint::Output, NarrowingPoint::EachStage] {
                for internal in [
                    Format::Q2_22,
                    Format::new(32, 30).unwrap(),
                    Format::new(20, 14).unwrap(),
                ] {
                    out.push(FftConfig {
                        n_points: n,
                        internal_fmt: internal,
                        scaling,
                        narrowing,
                        narrowing_point,
                        ..FftConfig::default()
                    });
                }
            }
        }
    }
    out
}

#[test]
fn pipeline_matches_behavioral_model_across_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1F);
    for n in [2, 4, 16, 64, 128] {
        for cfg in all_configs(n) {
            let mut p = FftPipeline::new(cfg).unwrap();
            for _ in 0..3 {
                let frame = random_frame(&mut rng, n, cfg.sample_fmt, 2047);
                let got = p.run_frame(&frame).unwrap().spectrum;
                assert_eq!(got, fixed_dif(&frame, &cfg).unwrap(), "{cfg:?}");
            }
        }
    }
}

#[test]
fn bit_slice_multiplier_gives_identical_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for internal in [Format::Q2_22, Format::new(32, 30).unwrap()] {
        let exact = FftConfig {
            internal_fmt: internal,
            ..FftConfig::default()
        };
        let sliced = FftConfig {
            multiplier: Multiplier::BitSlice,
            ..exact
        };
        let mut a = FftPipeline::new(exact).unwrap();
        let mut b = FftPipeline::new(sliced).unwrap();
        for _ in 0..10 {
            let frame = random_frame(&mut rng, 64, exact.sample_fmt, 2047);
            let x = a.run_frame(&frame).unwrap().spectrum;
            assert_eq!(x, b.run_frame(&frame).unwrap().spectrum);
            assert_eq!(x, fixed_dif(&frame, &sliced).unwrap());
        }
    }
}

#[test]
fn back_to_back_frames_and_stalls() {
    let cfg = FftConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let frames: Vec<_> = (0..12)
        .map(|_| random_frame(&mut rng, 64, cfg.sample_fmt, 2047))
        .collect();
    let want: Vec<_> = frames.iter().map(|f| fixed_dif(f, &cfg).unwrap()).collect();
    let mut p = FftPipeline::new(cfg).unwrap();
    assert_eq!(p.run_frames(&frames).unwrap(), want);
    for s in p.stages() {
        assert!(s.max_occupancy() <= s.depth());
    }
    // idle cycles anywhere, even mid-frame, only delay results
    let mut stall_rng = ChaCha8Rng::seed_from_u64(5);
    let mut budget = 0u32;
    let stalled = p
        .run_frames_with(&frames, |_| {
            if budget > 0 {
                budget -= 1;
                return true;
            }
            if stall_rng.gen_bool(0.1) {
                budget = stall_rng.gen_range(0..5);
                return true;
            }
            false
        })
        .unwrap();
    assert_eq!(stalled, want);
}

#[test]
fn impulse_gives_flat_spectrum() {
    let fmt = Format::Q1_11;
    let x0 = 2046; // ~0.999 full scale
    let mut frame = vec![ComplexFixed::zero(fmt); 64];
    frame[0] = ComplexFixed::from_raw(x0, 0, fmt).unwrap();

    let unscaled = FftConfig {
        scaling: Scaling::NoneWrap,
        ..FftConfig::default()
    };
    let r = FftPipeline::new(unscaled)
        .unwrap()
        .run_frame(&frame)
        .unwrap();
    assert_eq!(r.scale_factor, 1.0);
    assert!(r.spectrum.iter().all(|v| *v == frame[0]));

    let r = FftPipeline::new(FftConfig::default())
        .unwrap()
        .run_frame(&frame)
        .unwrap();
    assert_eq!(r.scale_factor, 1.0 / 64.0);
    // x0 / 64 = 31.97 LSB, truncated
    let expected = ComplexFixed::from_raw(x0 >> 6, 0, fmt).unwrap();
    assert!(r.spectrum.iter().all(|v| *v == expected));
    let (re, _) = r.spectrum[9].to_f64();
    assert!((re / r.scale_factor - x0 as f64 / 2048.0).abs() <= 64.0 * fmt.lsb());
}

#[test]
fn constant_gives_dc_only() {
    let fmt = Format::Q1_11;
    for c in [(1000, -300), (-2048, 2047), (1, 1)] {
        let frame = vec![ComplexFixed::from_raw(c.0, c.1, fmt).unwrap(); 64];
        let r = FftPipeline::new(FftConfig::default())
            .unwrap()
            .run_frame(&frame)
            .unwrap();
        assert_eq!(r.spectrum[0], frame[0]);
        for v in &r.spectrum[1..] {
            assert!(v.re().raw().abs() <= 6 && v.im().raw().abs() <= 6);
        }
    }
}

fn exact_cfg(n: usize) -> FftConfig {
    FftConfig {
        n_points: n,
        sample_fmt: Format::new(12, 0).unwrap(),
        internal_fmt: Format::new(24, 0).unwrap(),
        scaling: Scaling::NoneWrap,
        ..FftConfig::default()
    }
}

fn assert_exact_dft(cfg: &FftConfig, pipeline: &mut FftPipeline, ints: &[(i128, i128)]) {
    let frame: Vec<_> = ints
        .iter()
        .map(|&(r, i)| ComplexFixed::from_raw(r, i, cfg.sample_fmt).unwrap())
        .collect();
    let float: Vec<_> = ints
        .iter()
        .map(|&(r, i)| ComplexFloat::new(r as f64, i as f64))
        .collect();
    let want = dft_naive(&float);
    let got = pipeline.run_frame(&frame).unwrap().spectrum;
    for (g, w) in got.iter().zip(&want) {
        let (re, im) = (w.re.round(), w.im.round());
        assert!((w.re - re).abs() < 1e-9 && (w.im - im).abs() < 1e-9);
        assert_eq!(
            (g.re().raw() as f64, g.im().raw() as f64),
            (re, im),
            "{ints:?}"
        );
    }
}

#[test]
fn exact_dft_small_sizes_exhaustive() {
    let alphabet = [-2i128, -1, 0, 1, 2];
    // N = 2 and N = 4: every twiddle is +-1 or +-j, so nothing is rounded
    for n in [2usize, 4] {
        let cfg = exact_cfg(n);
        let mut p = FftPipeline::new(cfg).unwrap();
        let digits = 2 * n;
        let limit = 5usize.pow(digits as u32);
        for code in 0..limit {
            let mut c = code;
            let mut v = Vec::with_capacity(digits);
            for _ in 0..digits {
                v.push(alphabet[c % 5]);
                c /= 5;
            }
            let ints: Vec<_> = v.chunks(2).map(|p| (p[0], p[1])).collect();
            assert_exact_dft(&cfg, &mut p, &ints);
        }
    }
}

#[test]
fn exact_dft_n8_structured() {
    // With x[1] == x[5] and x[3] == x[7] the irrational twiddles W_8^1, W_8^3
    // only ever multiply zero differences.
    let cfg = exact_cfg(8);
    let mut p = FftPipeline::new(cfg).unwrap();
    let alphabet = [-2i128, -1, 0, 1, 2];
    for code in 0..5usize.pow(6) {
        let mut c = code;
        let mut reals = [0i128; 6];
        for r in &mut reals {
            *r = alphabet[c % 5];
            c /= 5;
        }
        let [x0, x1, x2, x3, x4, x6] = reals;
        let re = [x0, x1, x2, x3, x4, x1, x6, x3];
        let im = [1i128, -1, 0, 2, -2, -1, 1, 2];
        let ints: Vec<_> = re.into_iter().zip(im).collect();
        assert_exact_dft(&cfg, &mut p, &ints);
    }
}

/// floor(num / 2^shift) or round-half-even, via plain integer division.
fn rational_narrow(num: i128, shift: u32, nearest_even: bool) -> i128 {
    let den = 1i128 << shift;
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    if !nearest_even || 2 * r < den {
        q
    } else if 2 * r > den {
        q + 1
    } else {
        q + (q & 1)
    }
}

proptest! {
    #[test]
    fn butterfly_matches_rational_oracle(
        a in (-(1i128 << 23)..(1i128 << 23), -(1i128 << 23)..(1i128 << 23)),
        b in (-(1i128 << 23)..(1i128 << 23), -(1i128 << 23)..(1i128 << 23)),
        w in (-(1i128 << 22)..=(1i128 << 22), -(1i128 << 22)..=(1i128 << 22)),
        half: bool,
        nearest: bool,
    ) {
        let f = Format::Q2_22;
        let cfg = FftConfig {
            scaling: if half { Scaling::PerStageHalf } else { Scaling::NoneWrap },
            narrowing: if nearest { Rounding::NearestEven } else { Rounding::Truncate },
            ..FftConfig::default()
        };
        let ca = ComplexFixed::from_raw(a.0, a.1, f).unwrap();
        let cb = ComplexFixed::from_raw(b.0, b.1, f).unwrap();
        let cw = ComplexFixed::from_raw(w.0, w.1, f).unwrap();
        let (top, bot) = butterfly(ca, cb, cw, &cfg).unwrap();

        let extra = u32::from(half);
        let fit = |v: i128| {
            if half {
                v.clamp(f.min_raw(), f.max_raw())
            } else {
                let m = v.rem_euclid(1 << 24);
                if m >= 1 << 23 { m - (1 << 24) } else { m }
            }
        };
        let (dr, di) = (a.0 - b.0, a.1 - b.1);
        // sums carry 22 fraction bits, products 44
        let top_re = fit(rational_narrow(a.0 + b.0, extra, nearest));
        let top_im = fit(rational_narrow(a.1 + b.1, extra, nearest));
        let bot_re = fit(rational_narrow(dr * w.0 - di * w.1, 22 + extra, nearest));
        let bot_im = fit(rational_narrow(dr * w.1 + di * w.0, 22 + extra, nearest));
        prop_assert_eq!((top.re().raw(), top.im().raw()), (top_re, top_im));
        prop_assert_eq!((bot.re().raw(), bot.im().raw()), (bot_re, bot_im));
    }

    #[test]
    fn fixed_pipeline_is_nearly_linear(seed: u64) {
        let cfg = FftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_frame(&mut rng, 64, cfg.sample_fmt, 900);
        let y = random_frame(&mut rng, 64, cfg.sample_fmt, 900);
        let sum: Vec<_> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| {
                ComplexFixed::from_raw(a.re().raw() + b.re().raw(), a.im().raw() + b.im().raw(), cfg.sample_fmt).unwrap()
            })
            .collect();
        let mut p = FftPipeline::new(cfg).unwrap();
        let fx = p.run_frame(&x).unwrap().spectrum;
        let fy = p.run_frame(&y).unwrap().spectrum;
        let fs = p.run_frame(&sum).unwrap().spectrum;
        let stages = cfg.stages() as i128;
        for k in 0..64 {
            let dre = fs[k].re().raw() - fx[k].re().raw() - fy[k].re().raw();
            let dim = fs[k].im().raw() - fx[k].im().raw() - fy[k].im().raw();
            prop_assert!(dre.abs() <= stages && dim.abs() <= stages);
        }
    }
}
