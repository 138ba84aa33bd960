//! `bsdsp`: drive the bit-slice multiplier, convolution engine and FFT
//! pipeline models from the command line.
//!
//! Exit status: 0 ok, 1 I/O, 2 bad arguments, 3 format/parse error,
//! 4 size/range/length error, 5 self-check mismatch.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bitslice_dsp::bsm::{bsm_mul_signed, bsm_mul_unsigned, LutBank, SliceParams};
use bitslice_dsp::conv_engine::ConvEngine;
use bitslice_dsp::fft_pipeline::{
    gen_twiddle_rom, FftConfig, FftPipeline, Multiplier, NarrowingPoint, Scaling,
};
use bitslice_dsp::fixedpoint::{FixedWord, Format, Rounding};
use bitslice_dsp::formats::{float_vector_text, trace_text, twiddle_dump, SampleFile, TraceRow};
use bitslice_dsp::golden_models::{direct_conv, fixed_dif};
use bitslice_dsp::metrics::{snr_bench_with, BenchOptions, ReferenceInput};
use bitslice_dsp::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bsdsp",
    version,
    about = "Bit-slice multiplier, convolution and pipelined FFT models"
)]
struct Cli {
    /// Seed for every random draw (snr-bench).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Write a per-cycle trace here (conv, fft).
    #[arg(long, global = true, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Signed 16x16 multiply through the LUT bank.
    Mul {
        #[arg(allow_negative_numbers = true)]
        x: i64,
        #[arg(allow_negative_numbers = true)]
        y: i64,
        /// Also print the |x|*|y| partial-product matrix.
        #[arg(long)]
        partials: bool,
    },
    /// Linear convolution on the accumulator-array engine.
    Conv {
        x_file: PathBuf,
        h_file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Compare against a direct sum and fail on any difference.
        #[arg(long)]
        oracle: bool,
    },
    /// Run one frame through the cycle-level R2SDF pipeline.
    Fft {
        frame_file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        cfg: FftArgs,
        /// Cross-check against a behavioral model.
        #[arg(long, value_enum)]
        golden: Option<Golden>,
    },
    /// Dump a stage twiddle ROM as two's-complement hex.
    TwiddleGen {
        n: usize,
        #[arg(long, default_value_t = 24)]
        total: u32,
        #[arg(long, default_value_t = 22)]
        frac: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Measure pipeline SNR against a double-precision DFT.
    SnrBench {
        #[command(flatten)]
        cfg: FftArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0.9)]
        amplitude: f64,
        #[arg(long, value_enum, default_value_t = RefArg::Quantized)]
        reference: RefArg,
        /// Write trial_<i>_{frame,ref,test}.txt into this directory.
        #[arg(long, value_name = "DIR")]
        dump_vectors: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FftArgs {
    #[arg(long, default_value_t = 64)]
    points: usize,
    #[arg(long, default_value_t = 24)]
    twiddle_total: u32,
    #[arg(long, default_value_t = 22)]
    twiddle_frac: u32,
    #[arg(long, default_value_t = 24)]
    internal_total: u32,
    #[arg(long, default_value_t = 22)]
    internal_frac: u32,
    #[arg(long, value_enum, default_value_t = ScalingArg::PerStageHalf)]
    scaling: ScalingArg,
    #[arg(long, value_enum, default_value_t = RoundingArg::Truncate)]
    narrowing: RoundingArg,
    #[arg(long, value_enum, default_value_t = PointArg::Output)]
    narrowing_point: PointArg,
    #[arg(long, value_enum, default_value_t = MulArg::Exact)]
    multiplier: MulArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    PerStageHalf,
    NoneWrap,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundingArg {
    Truncate,
    NearestEven,
}

#[derive(Clone, Copy, ValueEnum)]
enum PointArg {
    Output,
    EachStage,
}

#[derive(Clone, Copy, ValueEnum)]
enum MulArg {
    Exact,
    BitSlice,
}

#[derive(Clone, Copy, ValueEnum)]
enum RefArg {
    Quantized,
    Unquantized,
}

#[derive(Clone, Copy, ValueEnum)]
enum Golden {
    Fixed,
}

impl FftArgs {
    fn config(&self, sample_fmt: Format) -> Result<FftConfig, CliError> {
        let cfg = FftConfig {
            n_points: self.points,
            sample_fmt,
            twiddle_fmt: Format::new(self.twiddle_total, self.twiddle_frac)?,
            internal_fmt: Format::new(self.internal_total, self.internal_frac)?,
            scaling: match self.scaling {
                ScalingArg::PerStageHalf => Scaling::PerStageHalf,
                ScalingArg::NoneWrap => Scaling::NoneWrap,
            },
            narrowing: match self.narrowing {
                RoundingArg::Truncate => Rounding::Truncate,
                RoundingArg::NearestEven => Rounding::NearestEven,
            },
            narrowing_point: match self.narrowing_point {
                PointArg::Output => NarrowingPoint::Output,
                PointArg::EachStage => NarrowingPoint::EachStage,
            },
            multiplier: match self.multiplier {
                MulArg::Exact => Multiplier::Exact,
                MulArg::BitSlice => Multiplier::BitSlice,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

enum CliError {
    Io(PathBuf, std::io::Error),
    Lib(Error),
    Mismatch(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(..) => 1,
            CliError::Lib(e) => match e {
                Error::Config(_) | Error::DegenerateReference => 2,
                Error::InvalidFormat { .. }
                | Error::FormatMismatch { .. }
                | Error::Parse { .. } => 3,
                Error::OutOfRange { .. }
                | Error::SliceParams(_)
                | Error::Size(_)
                | Error::Length { .. } => 4,
            },
            CliError::Mismatch(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Mismatch(m) => write!(f, "self-check mismatch: {m}"),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_owned(), e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(path.to_owned(), e))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn int16(v: i64) -> Result<FixedWord, CliError> {
    Ok(FixedWord::from_raw(v.into(), Format::INT16)?)
}

fn load_samples(path: &Path) -> Result<SampleFile, CliError> {
    let text = read(path)?;
    SampleFile::parse(&text).map_err(|e| match e {
        Error::Parse { line, msg } => CliError::Lib(Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        }),
        other => other.into(),
    })
}

fn cmd_mul(x: i64, y: i64, partials: bool) -> Result<(), CliError> {
    let (a, b) = (int16(x)?, int16(y)?);
    let bank = LutBank::new(SliceParams::DEFAULT_16X4)?;
    println!("{}", bsm_mul_signed(a, b, &bank)?.raw());
    if partials {
        print!(
            "{}",
            bsm_mul_unsigned(a.raw().unsigned_abs(), b.raw().unsigned_abs(), &bank)?
        );
    }
    Ok(())
}

fn cmd_conv(
    cli: &Cli,
    x_file: &Path,
    h_file: &Path,
    output: &Path,
    oracle: bool,
) -> Result<(), CliError> {
    let x = load_samples(x_file)?;
    let h = load_samples(h_file)?;
    let mut engine = ConvEngine::new();
    engine.load(&x.words(), &h.words())?;
    let (result, steps) = engine.run_traced()?;
    write(
        output,
        &SampleFile::real(result.output_fmt, result.y.iter().map(|&v| v.into())).to_string(),
    )?;
    println!(
        "outputs={} cycles_used={} rcv_count={} overflow={}",
        result.y.len(),
        result.cycles_used,
        result.rcv_count,
        u8::from(result.overflow_any)
    );
    if let Some(path) = &cli.trace {
        let rows: Vec<TraceRow> = steps
            .iter()
            .map(|s| TraceRow {
                cycle: s.cycle,
                stage_valids: None,
                emit: s.emitted.map(|(t, v)| (t, v.into(), 0)),
                rcv: s.rcv,
                routed: Some(s.products_routed.clone()),
            })
            .collect();
        write(path, &trace_text(&rows))?;
    }
    if oracle {
        let raw = |f: &SampleFile| {
            f.values
                .iter()
                .map(|&(re, _)| re as i64)
                .collect::<Vec<_>>()
        };
        let want = direct_conv(&raw(&x), &raw(&h));
        println!("# t engine oracle");
        let mut bad = Vec::new();
        for (t, (&got, &exact)) in result.y.iter().zip(&want).enumerate() {
            println!("{t} {got} {exact}");
            let fits = i32::try_from(exact).is_ok();
            // wrapped value must agree; an out-of-range sum must raise the flag
            if got != exact as i32 || (!fits && !result.overflow[t]) {
                bad.push(t);
            }
        }
        if result.y.len() != want.len() || !bad.is_empty() {
            return Err(CliError::Mismatch(format!(
                "outputs {bad:?} differ from the direct sum"
            )));
        }
        println!("oracle=ok");
    }
    Ok(())
}

fn cmd_fft(
    cli: &Cli,
    frame_file: &Path,
    output: &Path,
    args: &FftArgs,
    golden: Option<Golden>,
) -> Result<(), CliError> {
    let frame_file = load_samples(frame_file)?;
    let cfg = args.config(frame_file.fmt)?;
    let frame = frame_file.complex_values();
    let mut pipeline = FftPipeline::new(cfg)?;
    let result = pipeline.run_frame(&frame)?;
    write(
        output,
        &SampleFile::from_complex(cfg.sample_fmt, &result.spectrum).to_string(),
    )?;
    println!(
        "latency_cycles={} sort_cycles={} scale_factor={}",
        result.latency_cycles, result.sort_cycles, result.scale_factor
    );
    if let Some(path) = &cli.trace {
        let rows: Vec<TraceRow> = result
            .trace
            .iter()
            .map(|r| TraceRow {
                cycle: r.cycle,
                stage_valids: Some(r.stage_outputs_valid.clone()),
                emit: r
                    .emitted
                    .map(|e| (e.index, e.value.re().raw(), e.value.im().raw())),
                rcv: r.emitted.is_some(),
                routed: None,
            })
            .collect();
        write(path, &trace_text(&rows))?;
    }
    if let Some(Golden::Fixed) = golden {
        let want = fixed_dif(&frame, &cfg)?;
        let bad: Vec<usize> = (0..want.len())
            .filter(|&k| want[k] != result.spectrum[k])
            .collect();
        if !bad.is_empty() {
            return Err(CliError::Mismatch(format!(
                "bins {bad:?} differ from the behavioral model"
            )));
        }
        println!("golden=fixed ok");
    }
    Ok(())
}

fn cmd_twiddle_gen(n: usize, total: u32, frac: u32, output: Option<&Path>) -> Result<(), CliError> {
    let rom = gen_twiddle_rom(n, Format::new(total, frac)?)?;
    write_or_print(output, &twiddle_dump(&rom))
}

struct BenchArgs<'a> {
    cfg: &'a FftArgs,
    trials: usize,
    amplitude: f64,
    reference: RefArg,
    dump_vectors: Option<&'a Path>,
    output: Option<&'a Path>,
}

fn cmd_snr_bench(seed: u64, b: BenchArgs<'_>) -> Result<(), CliError> {
    let cfg = b.cfg.config(Format::Q1_11)?;
    let mut opts = BenchOptions::new(cfg, b.trials, seed, b.amplitude);
    opts.reference = match b.reference {
        RefArg::Quantized => ReferenceInput::Quantized,
        RefArg::Unquantized => ReferenceInput::Unquantized,
    };
    let (report, vectors) = snr_bench_with(&opts)?;
    if let Some(dir) = b.dump_vectors {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_owned(), e))?;
        for (i, v) in vectors.iter().enumerate() {
            let file = |kind: &str| dir.join(format!("trial_{i}_{kind}.txt"));
            write(
                &file("frame"),
                &SampleFile::from_complex(cfg.sample_fmt, &v.frame).to_string(),
            )?;
            write(&file("ref"), &float_vector_text("ref", &v.reference))?;
            write(
                &file("test"),
                &SampleFile::from_complex(cfg.sample_fmt, &v.test).to_string(),
            )?;
        }
    }
    write_or_print(b.output, &report.to_string())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Mul { x, y, partials } => cmd_mul(*x, *y, *partials),
        Cmd::Conv {
            x_file,
            h_file,
            output,
            oracle,
        } => cmd_conv(cli, x_file, h_file, output, *oracle),
        Cmd::Fft {
            frame_file,
            output,
            cfg,
            golden,
        } => cmd_fft(cli, frame_file, output, cfg, *golden),
        Cmd::TwiddleGen {
            n,
            total,
            frac,
            output,
        } => cmd_twiddle_gen(*n, *total, *frac, output.as_deref()),
        Cmd::SnrBench {
            cfg,
            trials,
            amplitude,
            reference,
            dump_vectors,
            output,
        } => cmd_snr_bench(
            cli.seed,
            BenchArgs {
                cfg,
                trials: *trials,
                amplitude: *amplitude,
                reference: *reference,
                dump_vectors: dump_vectors.as_deref(),
                output: output.as_deref(),
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bsdsp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
