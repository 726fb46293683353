//! Pressure sensor link: the line protocol spoken by the cube's sensor
//! board, calibration to normalized pressure, and a 10 Hz stream emulator.
//!
//! Wire format, one frame per line, ASCII:
//!
//! ```text
//! P <seq> <t_ms> <v0> <v1> <v2> <v3> <v4> <v5>\n
//! ```
//!
//! Fields are single-space separated unsigned decimals. `v0..v5` are raw
//! 10-bit readings (0..=1023) for faces `+X, -X, +Y, -Y, +Z, -Z`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::interaction::Pressures;
use crate::projection::FACE_COUNT;

pub const RAW_MAX: u16 = 1023;
pub const SAMPLE_PERIOD_MS: u64 = 100;
/// Lines longer than this are discarded up to the next newline.
pub const MAX_LINE_LEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PressureFrame {
    pub seq: u32,
    /// Milliseconds since stream start.
    pub t_ms: u64,
    pub raw: [u16; FACE_COUNT],
}

impl PressureFrame {
    pub fn new(seq: u32, t_ms: u64, raw: [u16; FACE_COUNT]) -> PressureFrame {
        PressureFrame { seq, t_ms, raw }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameError {
    Empty,
    WrongTag,
    FieldCount { found: usize },
    NotNumeric { field: usize },
    OutOfRange { field: usize },
    NotAscii,
    LineTooLong,
    SeqNotIncreasing { previous: u32, found: u32 },
}

impl fmt::Display for FrameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameError::Empty => f.write_str("empty line"),
            FrameError::WrongTag => f.write_str("line does not start with tag `P`"),
            FrameError::FieldCount { found } => write!(f, "expected 9 fields, found {found}"),
            FrameError::NotNumeric { field } => write!(f, "field {field} is not an unsigned decimal"),
            FrameError::OutOfRange { field } => write!(f, "field {field} out of range"),
            FrameError::NotAscii => f.write_str("line contains non-ASCII bytes"),
            FrameError::LineTooLong => write!(f, "line exceeds {MAX_LINE_LEN} bytes"),
            FrameError::SeqNotIncreasing { previous, found } => {
                write!(f, "sequence {found} does not follow {previous}")
            }
        }
    }
}

impl core::error::Error for FrameError {}

/// Serializes a frame to its wire line, newline included.
pub fn encode_frame(frame: &PressureFrame) -> Result<String, FrameError> {
    let mut line = String::with_capacity(48);
    encode_frame_into(frame, &mut line)?;
    Ok(line)
}

pub fn encode_frame_into(frame: &PressureFrame, out: &mut String) -> Result<(), FrameError> {
    if let Some(i) = frame.raw.iter().position(|&v| v > RAW_MAX) {
        return Err(FrameError::OutOfRange { field: 3 + i });
    }
    let _ = write!(out, "P {} {}", frame.seq, frame.t_ms);
    for v in frame.raw {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    Ok(())
}

fn parse_decimal(field: &[u8], index: usize, max: u64) -> Result<u64, FrameError> {
    if field.is_empty() || !field.iter().all(u8::is_ascii_digit) {
        return Err(FrameError::NotNumeric { field: index });
    }
    let mut value: u64 = 0;
    for &d in field {
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add(u64::from(d - b'0')))
            .ok_or(FrameError::OutOfRange { field: index })?;
    }
    if value > max {
        return Err(FrameError::OutOfRange { field: index });
    }
    Ok(value)
}

/// Parses one line, with or without its trailing `\n` (a `\r\n` ending is
/// also accepted).
pub fn parse_frame(line: &[u8]) -> Result<PressureFrame, FrameError> {
    let line = line.strip_suffix(b"\n").unwrap_or(line);
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    if line.is_empty() {
        return Err(FrameError::Empty);
    }
    if !line.is_ascii() {
        return Err(FrameError::NotAscii);
    }
    let fields: Vec<&[u8]> = line.split(|&b| b == b' ').collect();
    if fields[0] != b"P" {
        return Err(FrameError::WrongTag);
    }
    if fields.len() != 9 {
        return Err(FrameError::FieldCount { found: fields.len() });
    }
    let seq = parse_decimal(fields[1], 1, u64::from(u32::MAX))? as u32;
    let t_ms = parse_decimal(fields[2], 2, u64::MAX)?;
    let mut raw = [0u16; FACE_COUNT];
    for (i, slot) in raw.iter_mut().enumerate() {
        *slot = parse_decimal(fields[3 + i], 3 + i, u64::from(RAW_MAX))? as u16;
    }
    Ok(PressureFrame { seq, t_ms, raw })
}

/// Incremental decoder over a byte stream. Every complete line yields
/// exactly one result; a bad line never swallows the line after it.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    overflow: bool,
    last_seq: Option<u32>,
}

impl FrameDecoder {
    pub fn new() -> FrameDecoder {
        FrameDecoder::default()
    }

    /// Feeds bytes and appends one result per completed line to `out`.
    pub fn push(&mut self, bytes: &[u8], out: &mut Vec<Result<PressureFrame, FrameError>>) {
        for &b in bytes {
            if b == b'\n' {
                let result = if self.overflow { Err(FrameError::LineTooLong) } else { self.finish_line() };
                out.push(result);
                self.buf.clear();
                self.overflow = false;
            } else if self.overflow {
                continue;
            } else if self.buf.len() >= MAX_LINE_LEN {
                self.overflow = true;
                self.buf.clear();
            } else {
                self.buf.push(b);
            }
        }
    }

    /// Convenience wrapper around [`FrameDecoder::push`].
    pub fn decode(&mut self, bytes: &[u8]) -> Vec<Result<PressureFrame, FrameError>> {
        let mut out = Vec::new();
        self.push(bytes, &mut out);
        out
    }

    fn finish_line(&mut self) -> Result<PressureFrame, FrameError> {
        let frame = parse_frame(&self.buf)?;
        if let Some(previous) = self.last_seq {
            if frame.seq <= previous {
                return Err(FrameError::SeqNotIncreasing { previous, found: frame.seq });
            }
        }
        self.last_seq = Some(frame.seq);
        Ok(frame)
    }

    /// Bytes buffered toward an incomplete line.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationError {
    ZeroSpan { face: usize },
    ExceedsRange { face: usize },
}

impl fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationError::ZeroSpan { face } => write!(f, "face {face}: span must be positive"),
            CalibrationError::ExceedsRange { face } => {
                write!(f, "face {face}: baseline + span exceeds {RAW_MAX}")
            }
        }
    }
}

impl core::error::Error for CalibrationError {}

/// Per-face linear mapping from raw counts to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Calibration {
    baseline: [u16; FACE_COUNT],
    span: [u16; FACE_COUNT],
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration { baseline: [0; FACE_COUNT], span: [RAW_MAX; FACE_COUNT] }
    }
}

impl Calibration {
    pub fn new(baseline: [u16; FACE_COUNT], span: [u16; FACE_COUNT]) -> Result<Calibration, CalibrationError> {
        for face in 0..FACE_COUNT {
            if span[face] == 0 {
                return Err(CalibrationError::ZeroSpan { face });
            }
            if u32::from(baseline[face]) + u32::from(span[face]) > u32::from(RAW_MAX) {
                return Err(CalibrationError::ExceedsRange { face });
            }
        }
        Ok(Calibration { baseline, span })
    }

    pub fn baseline(&self) -> [u16; FACE_COUNT] {
        self.baseline
    }

    pub fn span(&self) -> [u16; FACE_COUNT] {
        self.span
    }
}

pub fn normalize(frame: &PressureFrame, cal: &Calibration) -> Pressures {
    let mut out = [0.0; FACE_COUNT];
    for (face, p) in out.iter_mut().enumerate() {
        let v = (f64::from(frame.raw[face]) - f64::from(cal.baseline[face])) / f64::from(cal.span[face]);
        *p = v.clamp(0.0, 1.0);
    }
    out
}

/// Piecewise-linear curve of raw readings over stream time (seconds).
/// Breakpoints must be sorted by time; equal times make a step, with the
/// later breakpoint taking effect at that instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curve {
    points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(points: Vec<(f64, f64)>) -> Option<Curve> {
        let sorted = points.windows(2).all(|w| w[0].0 <= w[1].0);
        let finite = points.iter().all(|(t, v)| t.is_finite() && v.is_finite());
        (sorted && finite).then_some(Curve { points })
    }

    pub fn constant(value: f64) -> Curve {
        Curve { points: alloc::vec![(0.0, value)] }
    }

    /// Value at time `t`, held constant before the first and after the last
    /// breakpoint; zero for an empty curve.
    pub fn sample(&self, t: f64) -> f64 {
        let pts = &self.points;
        let Some(first) = pts.first() else {
            return 0.0;
        };
        if t < first.0 {
            return first.1;
        }
        // last breakpoint with time <= t
        let k = pts.partition_point(|p| p.0 <= t) - 1;
        match pts.get(k + 1) {
            None => pts[k].1,
            Some(&(t1, v1)) => {
                let (t0, v0) = pts[k];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

/// Scripted raw pressure curves for the six faces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Envelope {
    pub faces: [Curve; FACE_COUNT],
}

impl Envelope {
    pub fn raw_at(&self, t: f64) -> [u16; FACE_COUNT] {
        let mut raw = [0u16; FACE_COUNT];
        for (face, r) in raw.iter_mut().enumerate() {
            let v = libm::round(self.faces[face].sample(t)).clamp(0.0, f64::from(RAW_MAX));
            *r = v as u16;
        }
        raw
    }
}

/// Samples the envelope every 100 ms, starting at t = 0, producing
/// `floor(10 * duration)` frames.
pub fn emulate_stream(envelope: &Envelope, duration_s: f64) -> Vec<PressureFrame> {
    let count = if duration_s > 0.0 { libm::floor(duration_s * 10.0 + 1e-9) as u64 } else { 0 };
    (0..count)
        .map(|k| {
            let t_ms = k * SAMPLE_PERIOD_MS;
            PressureFrame { seq: k as u32, t_ms, raw: envelope.raw_at(t_ms as f64 / 1000.0) }
        })
        .collect()
}
