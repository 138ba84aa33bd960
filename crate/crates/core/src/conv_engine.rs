//! Streaming linear-convolution engine.
//!
//! Inputs and kernel are queued in FIFOs. Each cycle one input sample is
//! taken from the FIFO and the kernel is laid over it: all `m` products
//! `x[i] * h[j]` are formed by the bit-slicing multiplier and the demux
//! routes each one to accumulator `i + j` of a 32 x 32-bit register file.
//! Accumulator `t` is final once `x[t]` (or the last input) has been
//! consumed; finished outputs leave in ascending `t`, one per cycle, with
//! `rcv` high.

use std::collections::VecDeque;

use crate::bsm::{bsm_mul_signed, LutBank, SliceParams};
use crate::error::{Error, Result};
use crate::fixedpoint::{FixedWord, Format};

/// Longest input or kernel the select logic can address.
pub const MAX_LEN: usize = 15;
/// `2 * MAX_LEN - 1`.
pub const MAX_OUTPUTS: usize = 2 * MAX_LEN - 1;
pub const REGFILE_LEN: usize = 32;
pub const ACC_BITS: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvConfig {
    n: usize,
    m: usize,
    sample_fmt: Format,
}

impl ConvConfig {
    pub fn new(n: usize, m: usize, sample_fmt: Format) -> Result<Self> {
        for (name, len) in [("input", n), ("kernel", m)] {
            if !(1..=MAX_LEN).contains(&len) {
                return Err(Error::Size(format!(
                    "{name} length {len} outside 1..={MAX_LEN}"
                )));
            }
        }
        if sample_fmt.total_bits() != 16 {
            // the multiplier takes 16-bit operands only
            return Err(Error::InvalidFormat {
                total_bits: sample_fmt.total_bits(),
                frac_bits: sample_fmt.frac_bits(),
            });
        }
        Ok(Self { n, m, sample_fmt })
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn m(self) -> usize {
        self.m
    }

    pub fn sample_fmt(self) -> Format {
        self.sample_fmt
    }

    pub fn output_len(self) -> usize {
        self.n + self.m - 1
    }

    /// Format of every output: 32 bits holding the product's fraction bits.
    pub fn output_fmt(self) -> Format {
        Format::new(ACC_BITS, 2 * self.sample_fmt.frac_bits()).expect("16-bit samples")
    }
}

/// One 32-bit register-file entry with a sticky overflow flag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Accumulator {
    pub value: i32,
    pub overflow: bool,
}

impl Accumulator {
    fn accumulate(&mut self, product: i32) {
        let (sum, ovf) = self.value.overflowing_add(product);
        self.value = sum;
        self.overflow |= ovf;
    }
}

/// What happened in one clock cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub cycle: u64,
    /// `(register index, product)` in demux order.
    pub products_routed: Vec<(usize, i32)>,
    pub rcv: bool,
    pub emitted: Option<(usize, i32)>,
    /// Set when the engine had nothing left to do; nothing was mutated.
    pub finished: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvResult {
    pub y: Vec<i32>,
    pub overflow: Vec<bool>,
    pub overflow_any: bool,
    pub cycles_used: u64,
    pub rcv_count: usize,
    pub output_fmt: Format,
}

#[derive(Clone, Debug)]
pub struct ConvEngine {
    bank: LutBank,
    config: Option<ConvConfig>,
    input_fifo: VecDeque<FixedWord>,
    kernel_fifo: VecDeque<FixedWord>,
    regfile: [Accumulator; REGFILE_LEN],
    demux_select: usize,
    rcv: bool,
    cycle: u64,
    consumed: usize,
    next_emit: usize,
}

impl Default for ConvEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl ConvEngine {
    pub fn new() -> Self {
        Self {
            bank: LutBank::new(SliceParams::DEFAULT_16X4).expect("16x4 slice parameters are valid"),
            config: None,
            input_fifo: VecDeque::with_capacity(MAX_LEN),
            kernel_fifo: VecDeque::with_capacity(MAX_LEN),
            regfile: [Accumulator::default(); REGFILE_LEN],
            demux_select: 0,
            rcv: false,
            cycle: 0,
            consumed: 0,
            next_emit: 0,
        }
    }

    /// Queue `x` and `h` and reset the datapath.
    pub fn load(&mut self, x: &[FixedWord], h: &[FixedWord]) -> Result<()> {
        let fmt = x.first().or(h.first()).map_or(Format::INT16, |w| w.fmt());
        let config = ConvConfig::new(x.len(), h.len(), fmt)?;
        if let Some(bad) = x.iter().chain(h).find(|w| w.fmt() != fmt) {
            return Err(Error::FormatMismatch {
                left: fmt,
                right: bad.fmt(),
            });
        }
        self.config = Some(config);
        self.input_fifo.clear();
        self.input_fifo.extend(x.iter().copied());
        self.kernel_fifo.clear();
        self.kernel_fifo.extend(h.iter().copied());
        self.regfile = [Accumulator::default(); REGFILE_LEN];
        self.demux_select = 0;
        self.rcv = false;
        self.cycle = 0;
        self.consumed = 0;
        self.next_emit = 0;
        Ok(())
    }

    pub fn config(&self) -> Option<ConvConfig> {
        self.config
    }

    pub fn regfile(&self) -> &[Accumulator; REGFILE_LEN] {
        &self.regfile
    }

    pub fn rcv(&self) -> bool {
        self.rcv
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn demux_select(&self) -> usize {
        self.demux_select
    }

    pub fn is_finished(&self) -> bool {
        self.config.is_none_or(|c| self.next_emit == c.output_len())
    }

    pub fn step(&mut self) -> StepReport {
        let Some(config) = self.config.filter(|_| !self.is_finished()) else {
            return StepReport {
                cycle: self.cycle,
                products_routed: Vec::new(),
                rcv: false,
                emitted: None,
                finished: true,
            };
        };

        let mut products_routed = Vec::new();
        if let Some(x) = self.input_fifo.pop_front() {
            let base = self.consumed;
            for (j, &h) in self.kernel_fifo.iter().enumerate() {
                let p = bsm_mul_signed(x, h, &self.bank).expect("formats checked at load");
                // 16x16 signed products are bounded by 2^30.
                let p = p.raw() as i32;
                self.demux_select = base + j;
                self.regfile[base + j].accumulate(p);
                products_routed.push((base + j, p));
            }
            self.consumed += 1;
        }

        let finalized = if self.consumed == config.n {
            config.output_len()
        } else {
            self.consumed
        };
        let emitted = (self.next_emit < finalized).then(|| {
            let t = self.next_emit;
            self.next_emit += 1;
            (t, self.regfile[t].value)
        });
        self.rcv = emitted.is_some();

        let report = StepReport {
            cycle: self.cycle,
            products_routed,
            rcv: self.rcv,
            emitted,
            finished: false,
        };
        self.cycle += 1;
        report
    }

    /// Step to completion, returning the result and every cycle's report.
    pub fn run_traced(&mut self) -> Result<(ConvResult, Vec<StepReport>)> {
        let config = self
            .config
            .ok_or_else(|| Error::Config("engine not loaded".into()))?;
        let mut y = Vec::with_capacity(config.output_len());
        let mut trace = Vec::new();
        loop {
            let report = self.step();
            if report.finished {
                break;
            }
            if let Some((t, v)) = report.emitted {
                debug_assert_eq!(t, y.len());
                y.push(v);
            }
            trace.push(report);
        }
        let overflow: Vec<bool> = self.regfile[..y.len()].iter().map(|a| a.overflow).collect();
        let result = ConvResult {
            overflow_any: overflow.iter().any(|&o| o),
            overflow,
            rcv_count: trace.iter().filter(|r| r.rcv).count(),
            cycles_used: self.cycle,
            output_fmt: config.output_fmt(),
            y,
        };
        Ok((result, trace))
    }
}

/// Load a fresh engine and run it to completion.
pub fn run(x: &[FixedWord], h: &[FixedWord]) -> Result<ConvResult> {
    let mut engine = ConvEngine::new();
    engine.load(x, h)?;
    engine.run_traced().map(|(r, _)| r)
}
