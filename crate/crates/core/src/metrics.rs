//! Truncation-noise measurement for the FFT pipeline.
//!
//! SNR is the spectrum-domain power ratio
//! `10 log10( sum |ref|^2 / sum |ref - test / scale|^2 )` between a
//! double-precision DFT and the fixed-point pipeline output.

use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft_pipeline::{FftConfig, FftPipeline, NarrowingPoint, Scaling};
use crate::fixedpoint::{ComplexFixed, Rounding};
use crate::golden_models::{dft_naive, ComplexFloat};

/// Returns `f64::INFINITY` when the test spectrum matches the reference exactly.
pub fn snr_db(reference: &[ComplexFloat], test: &[ComplexFixed], scale_factor: f64) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(Error::Length {
            expected: reference.len(),
            got: test.len(),
        });
    }
    let signal: f64 = reference.iter().map(|r| r.norm_sqr()).sum();
    if signal == 0.0 {
        return Err(Error::DegenerateReference);
    }
    let noise: f64 = reference
        .iter()
        .zip(test)
        .map(|(r, t)| {
            let (re, im) = t.to_f64();
            (r - ComplexFloat::new(re, im) / scale_factor).norm_sqr()
        })
        .sum();
    Ok(10.0 * (signal / noise).log10())
}

/// Which input image the float reference transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReferenceInput {
    /// The quantized frame the pipeline sees; SNR isolates datapath noise.
    #[default]
    Quantized,
    /// The unquantized random draw; SNR includes input quantization.
    Unquantized,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchOptions {
    pub cfg: FftConfig,
    pub trials: usize,
    pub seed: u64,
    pub amplitude: f64,
    pub reference: ReferenceInput,
}

impl BenchOptions {
    pub fn new(cfg: FftConfig, trials: usize, seed: u64, amplitude: f64) -> Self {
        Self {
            cfg,
            trials,
            seed,
            amplitude,
            reference: ReferenceInput::Quantized,
        }
    }
}

/// Reference and test spectra of one trial, kept for external recomputation.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialVectors {
    pub frame: Vec<ComplexFixed>,
    pub reference: Vec<ComplexFloat>,
    pub test: Vec<ComplexFixed>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnrReport {
    pub per_trial_db: Vec<f64>,
    pub mean_db: f64,
    pub trials: usize,
    pub options: BenchOptions,
}

fn fmt_db(v: f64) -> String {
    if v == f64::INFINITY {
        "exact".to_string()
    } else {
        v.to_string()
    }
}

impl fmt::Display for SnrReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.options;
        let c = &o.cfg;
        let mut s = String::new();
        writeln!(s, "# snr-bench report")?;
        writeln!(s, "n_points={}", c.n_points)?;
        for (name, fmt) in [
            ("sample_fmt", c.sample_fmt),
            ("twiddle_fmt", c.twiddle_fmt),
            ("internal_fmt", c.internal_fmt),
        ] {
            writeln!(
                s,
                "{name}=total:{},frac:{}",
                fmt.total_bits(),
                fmt.frac_bits()
            )?;
        }
        let scaling = match c.scaling {
            Scaling::PerStageHalf => "per-stage-half",
            Scaling::NoneWrap => "none-wrap",
        };
        let narrowing = match c.narrowing {
            Rounding::Truncate => "truncate",
            Rounding::NearestEven => "nearest-even",
        };
        let point = match c.narrowing_point {
            NarrowingPoint::Output => "output",
            NarrowingPoint::EachStage => "each-stage",
        };
        let reference = match o.reference {
            ReferenceInput::Quantized => "quantized",
            ReferenceInput::Unquantized => "unquantized",
        };
        writeln!(s, "scaling={scaling}")?;
        writeln!(s, "scale_factor={}", c.scale_factor())?;
        writeln!(s, "narrowing={narrowing}")?;
        writeln!(s, "narrowing_point={point}")?;
        writeln!(s, "reference={reference}")?;
        writeln!(s, "amplitude={}", o.amplitude)?;
        writeln!(s, "seed={}", o.seed)?;
        writeln!(s, "trials={}", self.trials)?;
        writeln!(s, "mean_db={}", fmt_db(self.mean_db))?;
        for (i, v) in self.per_trial_db.iter().enumerate() {
            writeln!(s, "trial={i} snr_db={}", fmt_db(*v))?;
        }
        f.write_str(&s)
    }
}

/// Draw trial `trial`'s frame. Each trial owns its own ChaCha stream, so
/// trials can run in any order and still see the same samples.
pub fn trial_frame(opts: &BenchOptions, trial: usize) -> (Vec<ComplexFixed>, Vec<ComplexFloat>) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(trial as u64);
    let a = opts.amplitude;
    (0..opts.cfg.n_points)
        .map(|_| {
            let v = ComplexFloat::new(rng.gen_range(-a..=a), rng.gen_range(-a..=a));
            let q = ComplexFixed::from_f64(v.re, v.im, opts.cfg.sample_fmt, Rounding::NearestEven);
            (q, v)
        })
        .unzip()
}

fn run_trial(opts: &BenchOptions, trial: usize) -> Result<(f64, TrialVectors)> {
    let (frame, raw) = trial_frame(opts, trial);
    let input: Vec<ComplexFloat> = match opts.reference {
        ReferenceInput::Quantized => frame
            .iter()
            .map(|q| {
                let (re, im) = q.to_f64();
                ComplexFloat::new(re, im)
            })
            .collect(),
        ReferenceInput::Unquantized => raw,
    };
    let reference = dft_naive(&input);
    let mut pipeline = FftPipeline::new(opts.cfg)?;
    let result = pipeline.run_frame(&frame)?;
    let snr = snr_db(&reference, &result.spectrum, result.scale_factor)?;
    Ok((
        snr,
        TrialVectors {
            frame,
            reference,
            test: result.spectrum,
        },
    ))
}

pub fn snr_bench(cfg: FftConfig, trials: usize, seed: u64, amplitude: f64) -> Result<SnrReport> {
    snr_bench_with(&BenchOptions::new(cfg, trials, seed, amplitude)).map(|(r, _)| r)
}

/// Run every trial (in parallel) and return the report plus each trial's vectors in trial order.
pub fn snr_bench_with(opts: &BenchOptions) -> Result<(SnrReport, Vec<TrialVectors>)> {
    if opts.trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    if !(opts.amplitude > 0.0 && opts.amplitude <= 1.0) {
        return Err(Error::Config(format!(
            "amplitude {} outside (0, 1]",
            opts.amplitude
        )));
    }
    opts.cfg.validate()?;
    let results = (0..opts.trials)
        .into_par_iter()
        .map(|t| run_trial(opts, t))
        .collect::<Result<Vec<_>>>()?;
    let (per_trial_db, vectors): (Vec<f64>, Vec<TrialVectors>) = results.into_iter().unzip();
    let mean_db = per_trial_db.iter().sum::<f64>() / per_trial_db.len() as f64;
    Ok((
        SnrReport {
            trials: per_trial_db.len(),
            per_trial_db,
            mean_db,
            options: *opts,
        },
        vectors,
    ))
}
