//! Plain-text file formats shared by the command-line tool.
//!
//! Sample file:
//! ```text
//! # fmt total=12 frac=11 complex=1
//! 1023 -4
//! -2048 0
//! ```
//! Twiddle ROM dump:
//! ```text
//! # fmt total=24 frac=22 n=8
//! 0 400000 000000
//! ```
//! Trace rows: `cycle=<u> stage_valids=<bits|-> emit_idx=<k|-> emit=<re>,<im>|- rcv=<0|1>`,
//! optionally followed by `routed=<idx>:<value>;...` for the convolution engine.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::fft_pipeline::TwiddleRom;
use crate::fixedpoint::{ComplexFixed, FixedWord, Format};
use crate::golden_models::ComplexFloat;

/// Raw sample counts plus their format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleFile {
    pub fmt: Format,
    pub complex: bool,
    /// `(re, im)`; `im` is zero for real files.
    pub values: Vec<(i128, i128)>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parse `key=value` tokens following a `#` header tag.
fn header_fields<'a>(line: &'a str, tag: &str, lineno: usize) -> Result<Vec<(&'a str, &'a str)>> {
    let rest = line
        .strip_prefix('#')
        .map(str::trim_start)
        .and_then(|l| l.strip_prefix(tag))
        .ok_or_else(|| parse_err(lineno, format!("expected `# {tag} ...` header")))?;
    rest.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .ok_or_else(|| parse_err(lineno, format!("malformed header field `{tok}`")))
        })
        .collect()
}

fn field<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str, line: usize) -> Result<T> {
    let (_, v) = fields
        .iter()
        .find(|(k, _)| *k == key)
        .ok_or_else(|| parse_err(line, format!("header lacks `{key}`")))?;
    v.parse()
        .map_err(|_| parse_err(line, format!("bad value `{v}` for `{key}`")))
}

impl SampleFile {
    pub fn real(fmt: Format, values: impl IntoIterator<Item = i128>) -> Self {
        Self {
            fmt,
            complex: false,
            values: values.into_iter().map(|v| (v, 0)).collect(),
        }
    }

    pub fn from_complex(fmt: Format, values: &[ComplexFixed]) -> Self {
        Self {
            fmt,
            complex: true,
            values: values
                .iter()
                .map(|c| (c.re().raw(), c.im().raw()))
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
        let fields = header_fields(header, "fmt", hline)?;
        let total: u32 = field(&fields, "total", hline)?;
        let frac: u32 = field(&fields, "frac", hline)?;
        let complex = match field::<u8>(&fields, "complex", hline)? {
            0 => false,
            1 => true,
            other => {
                return Err(parse_err(
                    hline,
                    format!("complex must be 0 or 1, got {other}"),
                ))
            }
        };
        let fmt = Format::new(total, frac).map_err(|e| parse_err(hline, e.to_string()))?;

        let mut values = Vec::new();
        for (lineno, line) in lines {
            if line.starts_with('#') {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<i128>()
                        .map_err(|_| parse_err(lineno, format!("not an integer: `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let pair = match (complex, nums.as_slice()) {
                (false, [re]) => (*re, 0),
                (true, [re, im]) => (*re, *im),
                _ => {
                    return Err(parse_err(
                        lineno,
                        format!("expected {} value(s)", if complex { 2 } else { 1 }),
                    ))
                }
            };
            for v in [pair.0, pair.1] {
                if !fmt.contains(v) {
                    return Err(parse_err(lineno, format!("{v} does not fit {fmt}")));
                }
            }
            values.push(pair);
        }
        Ok(Self {
            fmt,
            complex,
            values,
        })
    }

    pub fn words(&self) -> Vec<FixedWord> {
        self.values
            .iter()
            .map(|&(re, _)| FixedWord::from_raw(re, self.fmt).expect("range checked on parse"))
            .collect()
    }

    pub fn complex_values(&self) -> Vec<ComplexFixed> {
        self.values
            .iter()
            .map(|&(re, im)| {
                ComplexFixed::from_raw(re, im, self.fmt).expect("range checked on parse")
            })
            .collect()
    }
}

impl fmt::Display for SampleFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# fmt total={} frac={} complex={}",
            self.fmt.total_bits(),
            self.fmt.frac_bits(),
            u8::from(self.complex)
        )?;
        for (re, im) in &self.values {
            if self.complex {
                writeln!(f, "{re} {im}")?;
            } else {
                writeln!(f, "{re}")?;
            }
        }
        Ok(())
    }
}

/// Two's-complement hex of `raw` in `ceil(bits / 4)` upper-case digits.
pub fn twos_complement_hex(raw: i128, bits: u32) -> String {
    let digits = bits.div_ceil(4) as usize;
    let masked = (raw as u128) & ((1u128 << bits) - 1);
    format!("{masked:0digits$X}")
}

pub fn twiddle_dump(rom: &TwiddleRom) -> String {
    let fmt = rom.entries().first().map_or(Format::Q2_22, |e| e.fmt());
    let bits = fmt.total_bits();
    let mut s = format!(
        "# fmt total={} frac={} n={}\n",
        bits,
        fmt.frac_bits(),
        rom.n_stage()
    );
    for (k, e) in rom.entries().iter().enumerate() {
        let _ = writeln!(
            s,
            "{k} {} {}",
            twos_complement_hex(e.re().raw(), bits),
            twos_complement_hex(e.im().raw(), bits)
        );
    }
    s
}

/// Double-precision complex vector, one `re im` pair per line, written so it re-parses exactly.
pub fn float_vector_text(tag: &str, values: &[ComplexFloat]) -> String {
    let mut s = format!("# {tag} n={}\n", values.len());
    for v in values {
        let _ = writeln!(s, "{} {}", v.re, v.im);
    }
    s
}

pub fn parse_float_vector(text: &str) -> Result<Vec<ComplexFloat>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_err(i + 1, format!("not a number: `{t}`")))
            })
            .collect::<Result<_>>()?;
        match nums.as_slice() {
            [re, im] => out.push(ComplexFloat::new(*re, *im)),
            _ => return Err(parse_err(i + 1, "expected `re im`")),
        }
    }
    Ok(out)
}

pub const TRACE_HEADER: &str = "# trace columns: cycle stage_valids emit_idx emit rcv [routed]";

/// One cycle of a trace file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceRow {
    pub cycle: u64,
    pub stage_valids: Option<Vec<bool>>,
    pub emit: Option<(usize, i128, i128)>,
    pub rcv: bool,
    pub routed: Option<Vec<(usize, i32)>>,
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cycle={} stage_valids=", self.cycle)?;
        match &self.stage_valids {
            Some(v) => v
                .iter()
                .try_for_each(|&b| f.write_char(if b { '1' } else { '0' }))?,
            None => f.write_char('-')?,
        }
        match self.emit {
            Some((k, re, im)) => write!(f, " emit_idx={k} emit={re},{im}")?,
            None => write!(f, " emit_idx=- emit=-")?,
        }
        write!(f, " rcv={}", u8::from(self.rcv))?;
        if let Some(routed) = &self.routed {
            let cells: Vec<String> = routed.iter().map(|(i, v)| format!("{i}:{v}")).collect();
            write!(
                f,
                " routed={}",
                if cells.is_empty() {
                    "-".into()
                } else {
                    cells.join(";")
                }
            )?;
        }
        Ok(())
    }
}

pub fn trace_text(rows: &[TraceRow]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{r}");
    }
    s
}
