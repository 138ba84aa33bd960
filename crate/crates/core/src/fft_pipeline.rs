//! Cycle-level radix-2 single-path delay feedback (R2SDF) DIF FFT.
//!
//! An `N`-point pipeline is `log2 N` cascaded stages with feedback FIFOs of
//! depth `N/2, N/4, ..., 1`, followed by a sort unit that undoes the
//! bit-reversed output order. One call to [`FftPipeline::push_sample`] is one
//! clock cycle.
//!
//! Each stage cycles through a block of `2 * depth` valid inputs:
//!
//! - first half: the input waits in the FIFO. If a previous block exists, the
//!   difference stored at the FIFO head is multiplied by its twiddle factor
//!   and leaves as the stage output (multiply phase).
//! - second half: the FIFO head `a` meets the new input `b`; `a + b` leaves
//!   immediately and the exact difference `a - b` enters the FIFO (sum phase).
//!
//! Stages are clock-enabled by the valid flag of their input, so idle cycles
//! stall the datapath without disturbing FIFO alignment. The sort unit drains
//! on every cycle. Data stays in `internal_fmt` until the sort unit emits it,
//! where it is narrowed once to `sample_fmt`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::bsm::{bsm_mul_wide, LutBank, SliceParams};
use crate::error::{Error, Result};
use crate::fixedpoint::{
    add, mul_full, resize, sub, ComplexFixed, FixedWord, Format, Overflow, Rounding,
};

pub const MAX_POINTS: usize = 4096;

/// Overflow management across stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Scaling {
    /// Both butterfly outputs are halved, so the spectrum comes out as `DFT / N`.
    /// Results saturate if they ever leave the internal range.
    #[default]
    PerStageHalf,
    /// Unscaled; out-of-range results wrap.
    NoneWrap,
}

impl Scaling {
    pub fn overflow(self) -> Overflow {
        match self {
            Scaling::PerStageHalf => Overflow::Saturate,
            Scaling::NoneWrap => Overflow::Wrap,
        }
    }
}

/// Where the datapath drops back to sample precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum NarrowingPoint {
    /// Full internal precision through every stage, one narrowing at the sort output.
    #[default]
    Output,
    /// Additionally round every stage output to sample precision.
    EachStage,
}

/// How the real multiplies of the twiddle rotation are carried out. Both give identical results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Multiplier {
    #[default]
    Exact,
    /// Sign-magnitude limbs through the 16-bit LUT bit-slicing multiplier.
    BitSlice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FftConfig {
    pub n_points: usize,
    pub sample_fmt: Format,
    pub twiddle_fmt: Format,
    pub internal_fmt: Format,
    pub scaling: Scaling,
    pub narrowing: Rounding,
    pub narrowing_point: NarrowingPoint,
    pub multiplier: Multiplier,
}

impl Default for FftConfig {
    fn default() -> Self {
        Self {
            n_points: 64,
            sample_fmt: Format::Q1_11,
            twiddle_fmt: Format::Q2_22,
            internal_fmt: Format::Q2_22,
            scaling: Scaling::PerStageHalf,
            narrowing: Rounding::Truncate,
            narrowing_point: NarrowingPoint::Output,
            multiplier: Multiplier::Exact,
        }
    }
}

impl FftConfig {
    pub fn with_points(n_points: usize) -> Self {
        Self {
            n_points,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_points.is_power_of_two() || !(2..=MAX_POINTS).contains(&self.n_points) {
            return Err(Error::Size(format!(
                "point count {} must be a power of two in 2..={MAX_POINTS}",
                self.n_points
            )));
        }
        let (s, i) = (self.sample_fmt, self.internal_fmt);
        if i.frac_bits() < s.frac_bits() || i.int_bits() < s.int_bits() {
            // the internal format must hold every sample exactly
            return Err(Error::FormatMismatch { left: i, right: s });
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.n_points.trailing_zeros() as usize
    }

    /// Factor the emitted spectrum carries relative to the true DFT.
    pub fn scale_factor(&self) -> f64 {
        match self.scaling {
            Scaling::PerStageHalf => 1.0 / self.n_points as f64,
            Scaling::NoneWrap => 1.0,
        }
    }
}

/// Reverse the low `bits` bits of `i`.
pub fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Precomputed `W_n^k = exp(-j 2 pi k / n)` for `k < n/2`, with a counter that
/// selects the stage phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwiddleRom {
    entries: Vec<ComplexFixed>,
    n_stage: usize,
    counter: usize,
    valid_in: bool,
}

/// Control state the ROM counter drives into the butterfly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// First half of the first block: nothing to pair with yet.
    Waiting,
    /// Second half: `a + b` out, `a - b` into the FIFO.
    Sum,
    /// First half after a complete block: FIFO head times `W^k` out.
    Multiply(usize),
}

pub fn gen_twiddle_rom(n_stage: usize, fmt: Format) -> Result<TwiddleRom> {
    if !n_stage.is_power_of_two() || n_stage < 2 {
        return Err(Error::Size(format!(
            "stage size {n_stage} must be a power of two >= 2"
        )));
    }
    let entries = (0..n_stage / 2)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n_stage as f64;
            ComplexFixed::from_f64(theta.cos(), -theta.sin(), fmt, Rounding::NearestEven)
        })
        .collect();
    Ok(TwiddleRom {
        entries,
        n_stage,
        counter: 0,
        valid_in: false,
    })
}

impl TwiddleRom {
    pub fn entries(&self) -> &[ComplexFixed] {
        &self.entries
    }

    pub fn n_stage(&self) -> usize {
        self.n_stage
    }

    pub fn counter(&self) -> usize {
        self.counter
    }

    pub fn valid_in(&self) -> bool {
        self.valid_in
    }

    /// Phase for the current cycle; the counter advances only on valid input.
    fn tick(&mut self, valid: bool, primed: bool) -> Option<Phase> {
        self.valid_in = valid;
        if !valid {
            return None;
        }
        let depth = self.n_stage / 2;
        let c = self.counter;
        self.counter = (c + 1) % self.n_stage;
        Some(if c >= depth {
            Phase::Sum
        } else if primed {
            Phase::Multiply(c)
        } else {
            Phase::Waiting
        })
    }
}

/// Butterfly arithmetic shared by the pipeline stages.
#[derive(Clone, Debug)]
pub struct Datapath {
    cfg: FftConfig,
    bank: Option<LutBank>,
}

impl Datapath {
    pub fn new(cfg: FftConfig) -> Self {
        let bank = (cfg.multiplier == Multiplier::BitSlice).then(|| {
            LutBank::new(SliceParams::DEFAULT_16X4).expect("16x4 slice parameters are valid")
        });
        Self { cfg, bank }
    }

    fn mul(&self, a: FixedWord, b: FixedWord) -> FixedWord {
        match &self.bank {
            Some(bank) => bsm_mul_wide(a, b, bank),
            None => mul_full(a, b),
        }
    }

    /// Optional halving, narrowing to the internal format, optional sample-precision rounding.
    fn finish(&self, wide: FixedWord) -> FixedWord {
        let cfg = &self.cfg;
        let ovf = cfg.scaling.overflow();
        let v = match cfg.scaling {
            Scaling::PerStageHalf => wide.halve(),
            Scaling::NoneWrap => wide,
        };
        let v = resize(v, cfg.internal_fmt, ovf, cfg.narrowing);
        match cfg.narrowing_point {
            NarrowingPoint::Output => v,
            NarrowingPoint::EachStage => resize(
                resize(v, cfg.sample_fmt, ovf, cfg.narrowing),
                cfg.internal_fmt,
                ovf,
                Rounding::Truncate,
            ),
        }
    }

    /// Sum phase: narrowed `a + b` and the exact `a - b` (one guard bit wider than internal).
    pub fn butterfly_sum(&self, a: ComplexFixed, b: ComplexFixed) -> (ComplexFixed, ComplexFixed) {
        let exact = |f: fn(FixedWord, FixedWord, Overflow) -> Result<FixedWord>,
                     x: FixedWord,
                     y: FixedWord| {
            f(x.grow(1), y.grow(1), Overflow::Wrap).expect("operands share the internal format")
        };
        let top = ComplexFixed::from_parts_unchecked(
            self.finish(exact(add, a.re(), b.re())),
            self.finish(exact(add, a.im(), b.im())),
        );
        let diff = ComplexFixed::from_parts_unchecked(
            exact(sub, a.re(), b.re()),
            exact(sub, a.im(), b.im()),
        );
        (top, diff)
    }

    /// Multiply phase: `diff * w` with four exact real multiplies and two exact adds, then narrowed.
    pub fn twiddle_mul(&self, diff: ComplexFixed, w: ComplexFixed) -> ComplexFixed {
        let (dr, di) = (diff.re(), diff.im());
        let (wr, wi) = (w.re(), w.im());
        let combine = |f: fn(FixedWord, FixedWord, Overflow) -> Result<FixedWord>,
                       x: FixedWord,
                       y: FixedWord| {
            f(x.grow(1), y.grow(1), Overflow::Wrap).expect("products share a format")
        };
        let re = combine(sub, self.mul(dr, wr), self.mul(di, wi));
        let im = combine(add, self.mul(dr, wi), self.mul(di, wr));
        ComplexFixed::from_parts_unchecked(self.finish(re), self.finish(im))
    }
}

/// Radix-2 DIF butterfly: `top = a + b`, `bot = (a - b) * w`, each narrowed once.
pub fn butterfly(
    a: ComplexFixed,
    b: ComplexFixed,
    w: ComplexFixed,
    cfg: &FftConfig,
) -> Result<(ComplexFixed, ComplexFixed)> {
    for (v, fmt) in [
        (a, cfg.internal_fmt),
        (b, cfg.internal_fmt),
        (w, cfg.twiddle_fmt),
    ] {
        if v.fmt() != fmt {
            return Err(Error::FormatMismatch {
                left: fmt,
                right: v.fmt(),
            });
        }
    }
    let dp = Datapath::new(*cfg);
    let (top, diff) = dp.butterfly_sum(a, b);
    Ok((top, dp.twiddle_mul(diff, w)))
}

/// One pipeline stage: feedback FIFO, butterfly and twiddle ROM.
#[derive(Clone, Debug)]
pub struct FftStage {
    depth: usize,
    fifo: VecDeque<ComplexFixed>,
    phase: Phase,
    rom: TwiddleRom,
    primed: bool,
    out_valid: bool,
    max_occupancy: usize,
}

impl FftStage {
    fn new(depth: usize, twiddle_fmt: Format) -> Self {
        Self {
            depth,
            fifo: VecDeque::with_capacity(depth),
            phase: Phase::Waiting,
            rom: gen_twiddle_rom(2 * depth, twiddle_fmt).expect("depth is a power of two"),
            primed: false,
            out_valid: false,
            max_occupancy: 0,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn occupancy(&self) -> usize {
        self.fifo.len()
    }

    /// Highest FIFO occupancy seen since reset.
    pub fn max_occupancy(&self) -> usize {
        self.max_occupancy
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn rom(&self) -> &TwiddleRom {
        &self.rom
    }

    pub fn out_valid(&self) -> bool {
        self.out_valid
    }

    fn clock(&mut self, input: Option<ComplexFixed>, dp: &Datapath) -> Option<ComplexFixed> {
        let Some(phase) = self.rom.tick(input.is_some(), self.primed) else {
            self.out_valid = false;
            return None;
        };
        let x = input.expect("phase implies valid input");
        self.phase = phase;
        let out = match phase {
            Phase::Waiting => {
                self.fifo.push_back(x);
                None
            }
            Phase::Multiply(k) => {
                let diff = self.fifo.pop_front().expect("primed FIFO is full");
                self.fifo.push_back(x);
                Some(dp.twiddle_mul(diff, self.rom.entries[k]))
            }
            Phase::Sum => {
                let a = self.fifo.pop_front().expect("first half filled the FIFO");
                let (top, diff) = dp.butterfly_sum(a, x);
                self.fifo.push_back(diff);
                if self.rom.counter == 0 {
                    self.primed = true;
                }
                Some(top)
            }
        };
        self.max_occupancy = self.max_occupancy.max(self.fifo.len());
        debug_assert!(self.fifo.len() <= self.depth);
        self.out_valid = out.is_some();
        out
    }
}

/// One natural-order output of the sort unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Emission {
    pub frame: u64,
    pub index: usize,
    pub value: ComplexFixed,
}

/// Reorders bit-reversed stage output into natural order through a ping-pong buffer.
#[derive(Clone, Debug)]
pub struct SortBuffer {
    bits: u32,
    slots: Vec<Option<ComplexFixed>>,
    written: usize,
    frames_written: u64,
    drain: Option<(u64, Vec<ComplexFixed>, usize)>,
}

impl SortBuffer {
    pub fn new(n_points: usize) -> Self {
        Self {
            bits: n_points.trailing_zeros(),
            slots: vec![None; n_points],
            written: 0,
            frames_written: 0,
            drain: None,
        }
    }

    /// Slot that the `position`-th write of a frame lands in.
    pub fn write_mux(&self, position: usize) -> usize {
        bit_reverse(position, self.bits)
    }

    pub fn drained(&self) -> bool {
        self.drain.is_none()
    }

    /// One cycle: emit the next drained value (if any), then accept a write.
    pub fn clock(&mut self, input: Option<ComplexFixed>) -> Option<Emission> {
        let emitted = self.drain.as_mut().map(|(frame, values, next)| {
            let e = Emission {
                frame: *frame,
                index: *next,
                value: values[*next],
            };
            *next += 1;
            e
        });
        if matches!(&self.drain, Some((_, v, next)) if *next == v.len()) {
            self.drain = None;
        }
        if let Some(v) = input {
            let slot = self.write_mux(self.written);
            self.slots[slot] = Some(v);
            self.written += 1;
            if self.written == self.slots.len() {
                debug_assert!(self.drain.is_none(), "drain outpaced by writes");
                let values = self
                    .slots
                    .iter_mut()
                    .map(|s| s.take().expect("every slot written"))
                    .collect();
                self.drain = Some((self.frames_written, values, 0));
                self.frames_written += 1;
                self.written = 0;
            }
        }
        emitted
    }
}

/// What happened in one clock cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineReport {
    pub cycle: u64,
    pub input_valid: bool,
    pub stage_outputs_valid: Vec<bool>,
    /// Natural-order spectrum value, already narrowed to the sample format.
    pub emitted: Option<Emission>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FftFrameResult {
    pub spectrum: Vec<ComplexFixed>,
    /// Cycles from the first input to the first final-stage output.
    pub latency_cycles: u64,
    /// Cycles from the first final-stage output to the first sorted emission.
    pub sort_cycles: u64,
    pub scale_factor: f64,
    pub trace: Vec<PipelineReport>,
}

fn build_stages(cfg: &FftConfig) -> Vec<FftStage> {
    (0..cfg.stages())
        .map(|s| FftStage::new(cfg.n_points >> (s + 1), cfg.twiddle_fmt))
        .collect()
}

#[derive(Clone, Debug)]
pub struct FftPipeline {
    cfg: FftConfig,
    datapath: Datapath,
    stages: Vec<FftStage>,
    sort: SortBuffer,
    cycle: u64,
}

impl FftPipeline {
    pub fn new(cfg: FftConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            datapath: Datapath::new(cfg),
            stages: build_stages(&cfg),
            sort: SortBuffer::new(cfg.n_points),
            cycle: 0,
        })
    }

    pub fn config(&self) -> &FftConfig {
        &self.cfg
    }

    pub fn stages(&self) -> &[FftStage] {
        &self.stages
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Clear every FIFO, counter and the sort buffer.
    pub fn reset(&mut self) {
        self.stages = build_stages(&self.cfg);
        self.sort = SortBuffer::new(self.cfg.n_points);
        self.cycle = 0;
    }

    /// One cycle with a valid input sample in `sample_fmt`.
    pub fn push_sample(&mut self, x: ComplexFixed) -> Result<PipelineReport> {
        if x.fmt() != self.cfg.sample_fmt {
            return Err(Error::FormatMismatch {
                left: self.cfg.sample_fmt,
                right: x.fmt(),
            });
        }
        Ok(self.clock(Some(x)))
    }

    /// One cycle with no valid input.
    pub fn push_idle(&mut self) -> PipelineReport {
        self.clock(None)
    }

    fn clock(&mut self, x: Option<ComplexFixed>) -> PipelineReport {
        let cfg = self.cfg;
        let ovf = cfg.scaling.overflow();
        let mut carry = x.map(|v| v.resize(cfg.internal_fmt, ovf, Rounding::Truncate));
        let mut stage_outputs_valid = Vec::with_capacity(self.stages.len());
        for stage in &mut self.stages {
            carry = stage.clock(carry, &self.datapath);
            stage_outputs_valid.push(carry.is_some());
        }
        let emitted = self.sort.clock(carry).map(|e| Emission {
            value: e.value.resize(cfg.sample_fmt, ovf, cfg.narrowing),
            ..e
        });
        let report = PipelineReport {
            cycle: self.cycle,
            input_valid: x.is_some(),
            stage_outputs_valid,
            emitted,
        };
        self.cycle += 1;
        report
    }

    /// Reset, stream one frame, flush it with zero padding and collect the sorted spectrum.
    pub fn run_frame(&mut self, frame: &[ComplexFixed]) -> Result<FftFrameResult> {
        let n = self.cfg.n_points;
        if frame.len() != n {
            return Err(Error::Length {
                expected: n,
                got: frame.len(),
            });
        }
        self.reset();
        let zero = ComplexFixed::zero(self.cfg.sample_fmt);
        let mut trace = Vec::with_capacity(3 * n);
        let mut spectrum = Vec::with_capacity(n);
        let mut final_outputs = 0usize;
        let mut first_final = None;
        let mut first_emit = None;
        let mut fed = 0usize;
        while spectrum.len() < n {
            let report = if fed < n {
                fed += 1;
                self.push_sample(frame[fed - 1])?
            } else if final_outputs < n {
                // flush the FIFOs
                self.push_sample(zero)?
            } else {
                self.push_idle()
            };
            if *report
                .stage_outputs_valid
                .last()
                .expect("at least one stage")
            {
                final_outputs += 1;
                first_final.get_or_insert(report.cycle);
            }
            if let Some(e) = report.emitted {
                debug_assert_eq!((e.frame, e.index), (0, spectrum.len()));
                first_emit.get_or_insert(report.cycle);
                spectrum.push(e.value);
            }
            trace.push(report);
        }
        let first_final = first_final.expect("frame reached the last stage");
        Ok(FftFrameResult {
            spectrum,
            latency_cycles: first_final,
            sort_cycles: first_emit.expect("frame was emitted") - first_final,
            scale_factor: self.cfg.scale_factor(),
            trace,
        })
    }

    /// Stream frames back to back without gaps, then flush. Returns one spectrum per frame.
    pub fn run_frames(&mut self, frames: &[Vec<ComplexFixed>]) -> Result<Vec<Vec<ComplexFixed>>> {
        self.run_frames_with(frames, |_| false)
    }

    /// Like [`run_frames`](Self::run_frames), inserting an idle cycle before any
    /// sample for which `stall(sample_number)` is true.
    pub fn run_frames_with(
        &mut self,
        frames: &[Vec<ComplexFixed>],
        mut stall: impl FnMut(usize) -> bool,
    ) -> Result<Vec<Vec<ComplexFixed>>> {
        let n = self.cfg.n_points;
        if let Some(bad) = frames.iter().find(|f| f.len() != n) {
            return Err(Error::Length {
                expected: n,
                got: bad.len(),
            });
        }
        self.reset();
        let mut spectra: Vec<Vec<ComplexFixed>> =
            frames.iter().map(|_| Vec::with_capacity(n)).collect();
        let mut collect = |report: PipelineReport| {
            if let Some(e) = report.emitted {
                if let Some(s) = spectra.get_mut(e.frame as usize) {
                    s.push(e.value);
                }
            }
        };
        for (i, x) in frames.iter().flatten().enumerate() {
            while stall(i) {
                collect(self.push_idle());
            }
            collect(self.push_sample(*x)?);
        }
        // Padding pushes the last frame out of the FIFOs; the sort unit then drains on idle cycles.
        let zero = ComplexFixed::zero(self.cfg.sample_fmt);
        for _ in 1..n {
            collect(self.push_sample(zero)?);
        }
        for _ in 0..n + 1 {
            collect(self.push_idle());
        }
        Ok(spectra)
    }
}
