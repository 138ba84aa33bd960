//! Acceptance suite. Each test checks one exit criterion and prints a
//! `[PASS]` / `[FAIL]` line; run with `--nocapture` to see all of them.

use std::time::{Duration, Instant};

use bitslice_dsp::bsm::{bsm_mul_signed, bsm_mul_unsigned, LutBank, SliceParams};
use bitslice_dsp::conv_engine::{self, ConvEngine, MAX_LEN, MAX_OUTPUTS};
use bitslice_dsp::error::Error;
use bitslice_dsp::fft_pipeline::{gen_twiddle_rom, FftConfig, FftPipeline};
use bitslice_dsp::fixedpoint::{mul_full, ComplexFixed, FixedWord, Format, Rounding};
use bitslice_dsp::formats::{float_vector_text, parse_float_vector, SampleFile};
use bitslice_dsp::golden_models::{dft_naive, direct_conv, fft_dif_float, fixed_dif, ComplexFloat};
use bitslice_dsp::metrics::{snr_bench, snr_bench_with, BenchOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, ok: bool, elapsed: Duration, limit: Option<Duration>, detail: &str) {
    let timed_ok = limit.is_none_or(|l| elapsed < l);
    let verdict = if ok && timed_ok { "PASS" } else { "FAIL" };
    let budget = limit.map_or(String::new(), |l| format!(" / {:.0?}", l));
    println!("[{verdict}] criterion {id:>2}: {name} ({elapsed:.2?}{budget}) {detail}");
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(
        timed_ok,
        "criterion {id} exceeded its time budget: {elapsed:?}"
    );
}

fn i16w(v: i128) -> FixedWord {
    FixedWord::from_raw(v, Format::INT16).unwrap()
}

#[test]
fn criterion_01_bsm_exhaustive_8_bit() {
    let start = Instant::now();
    let bank = LutBank::new(SliceParams::new(8, 4, 2).unwrap()).unwrap();
    let mut mismatches = 0u64;
    for x in 0..256u128 {
        for y in 0..256u128 {
            if bsm_mul_unsigned(x, y, &bank).unwrap().value() != x * y {
                mismatches += 1;
            }
        }
    }
    report(
        1,
        "BSM exact over all 2^16 pairs, B=8 p=4 t=2",
        mismatches == 0,
        start.elapsed(),
        Some(Duration::from_secs(5)),
        &format!("mismatches={mismatches}"),
    );
}

#[test]
fn criterion_02_bsm_16_bit_configuration() {
    let start = Instant::now();
    let bank = LutBank::new(SliceParams::DEFAULT_16X4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB5A);
    let mut mismatches = 0u64;
    let mut bad_partials = 0u64;
    let mut check = |a: i128, b: i128| {
        let got = bsm_mul_signed(i16w(a), i16w(b), &bank).unwrap();
        if got != mul_full(i16w(a), i16w(b)) {
            mismatches += 1;
        }
        let prod = bsm_mul_unsigned(a.unsigned_abs(), b.unsigned_abs(), &bank).unwrap();
        if prod.partials().len() != 16 || prod.partials().iter().sum::<u128>() != prod.value() {
            bad_partials += 1;
        }
    };
    for _ in 0..1_000_000 {
        check(rng.gen_range(-32768..=32767), rng.gen_range(-32768..=32767));
    }
    let edges = [-32768, -32767, -1, 0, 1, 32767];
    for &a in &edges {
        for &b in &edges {
            check(a, b);
        }
    }
    report(
        2,
        "BSM B=16 p=4 t=4 matches mul_full on 10^6 random + edge set, 16 partials",
        mismatches == 0 && bad_partials == 0 && bank.table_count() == 16,
        start.elapsed(),
        Some(Duration::from_secs(10)),
        &format!(
            "mismatches={mismatches} bad_partials={bad_partials} luts={}",
            bank.table_count()
        ),
    );
}

#[test]
fn criterion_03_convolution_oracle_sweep() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
    let (mut failures, mut runs, mut overflowed) = (0u32, 0u32, 0u32);
    for n in 1..=MAX_LEN {
        for m in 1..=MAX_LEN {
            for _ in 0..10 {
                let x: Vec<i64> = (0..n).map(|_| rng.gen_range(-32768..=32767)).collect();
                let h: Vec<i64> = (0..m).map(|_| rng.gen_range(-32768..=32767)).collect();
                let xs: Vec<_> = x.iter().map(|&v| i16w(v as i128)).collect();
                let hs: Vec<_> = h.iter().map(|&v| i16w(v as i128)).collect();
                let r = conv_engine::run(&xs, &hs).unwrap();
                let oracle = direct_conv(&x, &h);
                let wrapped_ok = r.y.len() == oracle.len()
                    && r.y.iter().zip(&oracle).all(|(y, o)| *y == *o as i32);
                let exact_when_clean =
                    r.overflow_any || r.y.iter().zip(&oracle).all(|(y, o)| *y as i128 == *o);
                let flagged_when_needed =
                    r.overflow_any || oracle.iter().all(|o| i32::try_from(*o).is_ok());
                let rcv_ok = r.rcv_count == n + m - 1;
                if !(wrapped_ok && exact_when_clean && flagged_when_needed && rcv_ok) {
                    failures += 1;
                }
                overflowed += u32::from(r.overflow_any);
                runs += 1;
            }
        }
    }
    report(
        3,
        "convolution engine == direct sum (mod 2^32 + flag), rcv fires n+m-1 times",
        failures == 0,
        start.elapsed(),
        Some(Duration::from_secs(30)),
        &format!("runs={runs} failures={failures} overflowed={overflowed}"),
    );
}

#[test]
fn criterion_04_convolution_size_gate() {
    let start = Instant::now();
    let ones = |k: usize| vec![i16w(1); k];
    let mut engine = ConvEngine::new();
    let n16 = matches!(engine.load(&ones(16), &ones(3)), Err(Error::Size(_)));
    let m16 = matches!(engine.load(&ones(3), &ones(16)), Err(Error::Size(_)));
    let full = conv_engine::run(&ones(15), &ones(15)).unwrap();
    report(
        4,
        "n=16 / m=16 rejected, n=m=15 yields 29 outputs",
        n16 && m16 && full.y.len() == 29 && MAX_OUTPUTS == 29,
        start.elapsed(),
        None,
        &format!("outputs={}", full.y.len()),
    );
}

fn random_q111_frame(rng: &mut ChaCha8Rng, n: usize) -> Vec<ComplexFixed> {
    (0..n)
        .map(|_| {
            ComplexFixed::from_raw(
                rng.gen_range(-2048..=2047),
                rng.gen_range(-2048..=2047),
                Format::Q1_11,
            )
            .unwrap()
        })
        .collect()
}

#[test]
fn criterion_05_pipeline_matches_behavioral_model() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF5);
    let mut mismatched_bins = 0usize;
    let mut frames = 0usize;
    for n in [8, 64] {
        let cfg = FftConfig::with_points(n);
        let mut p = FftPipeline::new(cfg).unwrap();
        for _ in 0..200 {
            let frame = random_q111_frame(&mut rng, n);
            let got = p.run_frame(&frame).unwrap().spectrum;
            let want = fixed_dif(&frame, &cfg).unwrap();
            mismatched_bins += got.iter().zip(&want).filter(|(a, b)| a != b).count();
            frames += 1;
        }
    }
    report(
        5,
        "R2SDF pipeline bit-exact vs behavioral fixed DIF, N in {8, 64}",
        mismatched_bins == 0,
        start.elapsed(),
        Some(Duration::from_secs(30)),
        &format!("frames={frames} mismatched_bins={mismatched_bins}"),
    );
}

fn norm_rel_err(a: &[ComplexFloat], b: &[ComplexFloat]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

#[test]
fn criterion_06_float_path() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF6);
    let (mut worst_fft, mut worst_parseval) = (0.0f64, 0.0f64);
    for log in 1..=12 {
        let n = 1usize << log;
        for _ in 0..20 {
            let frame: Vec<ComplexFloat> = (0..n)
                .map(|_| ComplexFloat::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let naive = dft_naive(&frame);
            let fast = fft_dif_float(&frame).unwrap();
            worst_fft = worst_fft.max(norm_rel_err(&fast, &naive));
            let time: f64 = frame.iter().map(|v| v.norm_sqr()).sum();
            let freq: f64 = naive.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            worst_parseval = worst_parseval.max(((time - freq) / time).abs());
        }
    }
    report(
        6,
        "fft_dif_float == dft_naive and Parseval, N=2..4096, rel 1e-9",
        worst_fft <= 1e-9 && worst_parseval <= 1e-9,
        start.elapsed(),
        Some(Duration::from_secs(60)),
        &format!("worst_fft_rel={worst_fft:.3e} worst_parseval_rel={worst_parseval:.3e}"),
    );
}

#[test]
fn criterion_07_streaming_latency_contract() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF7);
    let frame = random_q111_frame(&mut rng, 64);
    let mut p = FftPipeline::new(FftConfig::default()).unwrap();
    let r = p.run_frame(&frame).unwrap();
    let first_input = r.trace.iter().find(|t| t.input_valid).unwrap().cycle;
    let first_valid_per_stage: Vec<u64> = (0..6)
        .map(|s| {
            r.trace
                .iter()
                .find(|t| t.stage_outputs_valid[s])
                .unwrap()
                .cycle
        })
        .collect();
    let emit_cycles: Vec<u64> = r
        .trace
        .iter()
        .filter(|t| t.emitted.is_some())
        .map(|t| t.cycle)
        .collect();
    let first_final = first_valid_per_stage[5] - first_input;
    let sort = emit_cycles[0] - first_valid_per_stage[5];
    let depths_ok = first_valid_per_stage == vec![32, 48, 56, 60, 62, 63];
    let contiguous = emit_cycles.len() == 64 && emit_cycles.windows(2).all(|w| w[1] == w[0] + 1);
    let ok = first_final == 63
        && r.latency_cycles == 63
        && sort == 64
        && r.sort_cycles == 64
        && depths_ok
        && contiguous;
    report(
        7,
        "first final-stage output at cycle 63, sort unit takes 64 cycles",
        ok,
        start.elapsed(),
        None,
        &format!("latency={first_final} sort={sort} stage_first_valid={first_valid_per_stage:?}"),
    );
}

/// Independent recomputation from dumped text vectors.
fn recompute_snr(ref_text: &str, test_text: &str, scale_factor: f64) -> f64 {
    let reference = parse_float_vector(ref_text).unwrap();
    let test = SampleFile::parse(test_text).unwrap();
    let lsb = (-(test.fmt.frac_bits() as f64)).exp2();
    let mut signal = 0.0;
    let mut noise = 0.0;
    for (r, &(tr, ti)) in reference.iter().zip(&test.values) {
        let er = r.re - tr as f64 * lsb / scale_factor;
        let ei = r.im - ti as f64 * lsb / scale_factor;
        signal += r.re * r.re + r.im * r.im;
        noise += er * er + ei * ei;
    }
    10.0 * (signal / noise).log10()
}

#[test]
fn criterion_08_snr_properties() {
    let start = Instant::now();
    let base = FftConfig::default();

    let a = snr_bench(base, 100, 42, 0.9).unwrap();
    let b = snr_bench(base, 100, 42, 0.9).unwrap();
    let deterministic = a.to_string() == b.to_string();

    let wide = FftConfig {
        internal_fmt: Format::new(32, 30).unwrap(),
        ..base
    };
    let w = snr_bench(wide, 100, 42, 0.9).unwrap();
    let widening_ok = w.mean_db >= a.mean_db - 0.1;

    let rounded = FftConfig {
        narrowing: Rounding::NearestEven,
        ..base
    };
    let r = snr_bench(rounded, 100, 42, 0.9).unwrap();
    let rounding_ok = r.mean_db >= a.mean_db - 0.1;

    let dir = tempfile::tempdir().unwrap();
    let (dumped, vectors) = snr_bench_with(&BenchOptions::new(base, 100, 42, 0.9)).unwrap();
    let mut worst = 0.0f64;
    for (i, v) in vectors.iter().enumerate() {
        let rp = dir.path().join(format!("trial_{i}_ref.txt"));
        let tp = dir.path().join(format!("trial_{i}_test.txt"));
        std::fs::write(&rp, float_vector_text("ref", &v.reference)).unwrap();
        std::fs::write(
            &tp,
            SampleFile::from_complex(base.sample_fmt, &v.test).to_string(),
        )
        .unwrap();
        let again = recompute_snr(
            &std::fs::read_to_string(&rp).unwrap(),
            &std::fs::read_to_string(&tp).unwrap(),
            base.scale_factor(),
        );
        worst = worst.max((again - dumped.per_trial_db[i]).abs());
    }
    let recompute_ok = worst <= 1e-9 && dumped == a;

    report(
        8,
        "SNR: deterministic, widening and rounding never hurt >0.1 dB, external recompute",
        deterministic && widening_ok && rounding_ok && recompute_ok,
        start.elapsed(),
        Some(Duration::from_secs(60)),
        &format!(
            "mean_db q2.22/trunc={:.4} q2.30={:.4} nearest={:.4} recompute_max_diff={worst:.2e}",
            a.mean_db, w.mean_db, r.mean_db
        ),
    );
}

#[test]
fn criterion_09_twiddle_rom_anchors() {
    let start = Instant::now();
    let f = Format::Q2_22;
    let rom8 = gen_twiddle_rom(8, f).unwrap();
    let w0 = rom8.entries()[0];
    let w2 = rom8.entries()[2];
    let anchors = (w0.re().raw(), w0.im().raw()) == (0x400000, 0)
        && (w2.re().raw(), w2.im().raw()) == (0, -0x400000);
    let bound = 1.0 + f.lsb();
    let mut worst = 0.0f64;
    for log in 1..=12 {
        for e in gen_twiddle_rom(1 << log, f).unwrap().entries() {
            let (re, im) = e.to_f64();
            worst = worst.max(re.hypot(im));
        }
    }
    report(
        9,
        "W^0 = +1.0, W_8^2 = -j exactly, |W| <= 1 + 2^-22",
        anchors && worst <= bound,
        start.elapsed(),
        None,
        &format!("max_magnitude={worst:.12}"),
    );
}

#[test]
fn criterion_10_throughput() {
    let cfg = FftConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF10);
    let frames: Vec<Vec<ComplexFixed>> = (0..10_000)
        .map(|_| random_q111_frame(&mut rng, 64))
        .collect();
    let mut p = FftPipeline::new(cfg).unwrap();
    let start = Instant::now();
    let spectra = p.run_frames(&frames).unwrap();
    let elapsed = start.elapsed();
    let complete = spectra.len() == 10_000 && spectra.iter().all(|s| s.len() == 64);
    let spot = [0, 4_999, 9_999]
        .iter()
        .all(|&i| spectra[i] == fixed_dif(&frames[i], &cfg).unwrap());
    report(
        10,
        "10^4 back-to-back 64-point frames through the cycle-level pipeline",
        complete && spot,
        elapsed,
        Some(Duration::from_secs(5)),
        &format!("cycles={}", p.cycle()),
    );
}
