//! Session recordings: JSON lines holding the configuration and scene,
//! then every input with its simulated time, then the final tick and
//! state hash. Replaying the inputs reproduces the session exactly.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tangible_core::scene::Scene;
use tangible_core::session::{SessionConfig, StateSnapshot};

use crate::doc::{ConfigDoc, DocError, SceneDoc};
use crate::input::{InputMsg, TraceRecord};
use crate::runner::{RunError, Runner};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum RecordLine {
    Header { v: u32, config: ConfigDoc, scene: SceneDoc },
    Input { t: f64, input: InputMsg },
    End { tick: u64, hash: String },
}

pub fn hash_hex(hash: u64) -> String {
    format!("{hash:016x}")
}

pub fn parse_hash_hex(s: &str) -> Option<u64> {
    if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    u64::from_str_radix(s, 16).ok()
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("recording is empty")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_err(line: usize, message: impl Into<String>) -> RecordError {
    RecordError::Format { line, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub config: ConfigDoc,
    pub scene: SceneDoc,
    pub inputs: Vec<TraceRecord>,
    /// Final tick and hash, absent when the writer stopped early.
    pub end: Option<(u64, u64)>,
}

impl Recording {
    pub fn read(reader: impl BufRead) -> Result<Recording, RecordError> {
        let mut header: Option<(ConfigDoc, SceneDoc)> = None;
        let mut inputs: Vec<TraceRecord> = Vec::new();
        let mut end = None;
        for (i, line) in reader.lines().enumerate() {
            let n = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if end.is_some() {
                return Err(format_err(n, "content after the end record"));
            }
            let record: RecordLine = serde_json::from_str(&line).map_err(|e| format_err(n, e.to_string()))?;
            match (record, header.is_some()) {
                (RecordLine::Header { v, config, scene }, false) => {
                    if v != FORMAT_VERSION {
                        return Err(format_err(n, format!("unsupported recording version {v}")));
                    }
                    header = Some((config, scene));
                }
                (RecordLine::Header { .. }, true) => return Err(format_err(n, "second header")),
                (_, false) => return Err(format_err(n, "first record must be the header")),
                (RecordLine::Input { t, input }, true) => {
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(format_err(n, format!("input time {t} is invalid")));
                    }
                    if inputs.last().is_some_and(|p| t < p.t) {
                        return Err(format_err(n, "input goes back in time"));
                    }
                    inputs.push(TraceRecord { t, input });
                }
                (RecordLine::End { tick, hash }, true) => {
                    let hash = parse_hash_hex(&hash).ok_or_else(|| format_err(n, "hash must be 16 hex digits"))?;
                    end = Some((tick, hash));
                }
            }
        }
        let (config, scene) = header.ok_or(RecordError::Empty)?;
        Ok(Recording { config, scene, inputs, end })
    }

    pub fn load(path: &Path) -> Result<Recording, RecordError> {
        Recording::read(BufReader::new(File::open(path)?))
    }

    pub fn write(&self, mut out: impl Write) -> io::Result<()> {
        let header = RecordLine::Header { v: FORMAT_VERSION, config: self.config.clone(), scene: self.scene.clone() };
        write_line(&mut out, &header)?;
        for r in &self.inputs {
            write_line(&mut out, &RecordLine::Input { t: r.t, input: r.input.clone() })?;
        }
        if let Some((tick, hash)) = self.end {
            write_line(&mut out, &RecordLine::End { tick, hash: hash_hex(hash) })?;
        }
        out.flush()
    }

    /// Tick count to replay: the recorded end, or the tick of the last
    /// input when the recording was cut short.
    pub fn ticks(&self) -> u64 {
        match (self.end, self.inputs.last()) {
            (Some((tick, _)), _) => tick,
            (None, Some(last)) => (last.t / self.config.dt).ceil() as u64,
            (None, None) => 0,
        }
    }
}

fn write_line(out: &mut impl Write, line: &RecordLine) -> io::Result<()> {
    serde_json::to_writer(&mut *out, line)?;
    out.write_all(b"\n")
}

/// Streams a recording to disk as the session runs.
pub struct Recorder {
    out: Box<dyn Write + Send>,
}

impl Recorder {
    pub fn new(mut out: Box<dyn Write + Send>, config: &SessionConfig, scene: &Scene) -> io::Result<Recorder> {
        let header = RecordLine::Header {
            v: FORMAT_VERSION,
            config: ConfigDoc::from_config(config),
            scene: SceneDoc::from_scene(scene),
        };
        write_line(&mut out, &header)?;
        Ok(Recorder { out })
    }

    pub fn create(path: &Path, config: &SessionConfig, scene: &Scene) -> io::Result<Recorder> {
        Recorder::new(Box::new(BufWriter::new(File::create(path)?)), config, scene)
    }

    pub fn input(&mut self, t: f64, input: &InputMsg) -> io::Result<()> {
        write_line(&mut self.out, &RecordLine::Input { t, input: input.clone() })
    }

    pub fn finish(mut self, tick: u64, hash: u64) -> io::Result<()> {
        write_line(&mut self.out, &RecordLine::End { tick, hash: hash_hex(hash) })?;
        self.out.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub ticks: u64,
    pub final_hash: u64,
    /// Whether the final hash matched the recorded one, when present.
    pub verified: Option<bool>,
}

/// Replays a recording headless (or with cameras) and reports every
/// tick's snapshot to `observe`.
pub fn replay(
    rec: &Recording,
    headless: bool,
    mut observe: impl FnMut(&StateSnapshot),
) -> Result<ReplayOutcome, RunError> {
    let scene = rec.scene.to_scene()?;
    let config = rec.config.to_config(headless)?;
    let mut runner = Runner::new(scene, config)?;
    for r in &rec.inputs {
        runner.submit_at(r.t, r.input.clone()).map_err(|e| match e {
            RunError::Doc(DocError::Invalid { path, message }) => {
                RunError::Doc(DocError::Invalid { path: format!("input at t={}: {path}", r.t), message })
            }
            other => other,
        })?;
    }
    let ticks = rec.ticks();
    let mut final_hash = runner.snapshot().state_hash();
    for _ in 0..ticks {
        let step = runner.step()?;
        final_hash = step.snapshot.state_hash();
        observe(&step.snapshot);
    }
    let verified = rec.end.map(|(tick, hash)| tick == ticks && hash == final_hash);
    Ok(ReplayOutcome { ticks, final_hash, verified })
}
