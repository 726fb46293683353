//! Study task scripts and run metrics.
//!
//! A script bundles the scene (inline or by path), the target timeline,
//! the FoV condition, an input trace (inline or a JSON-lines file of
//! `{"t": .., "input": {..}}` records), an optional pressure envelope
//! emulated at 10 Hz, and optionally the positions a participant
//! recalled after the run.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tangible_core::interaction::Thresholds;
use tangible_core::physics::DEFAULT_DT;
use tangible_core::sensor::{emulate_stream, Curve, Envelope};
use tangible_core::session::{InputEvent, DEFAULT_HEAD};
use tangible_core::spatial::Vec3;
use tangible_core::study::{RunMetrics, TaskScript};

use crate::doc::{vec3, CalibrationDoc, DocError, FovDoc, SceneDoc, TimelineDoc, VolumeDoc};
use crate::input::{InputMsg, TraceRecord};
use crate::record::hash_hex;

fn default_horizon() -> f64 {
    300.0
}

/// Per-face raw curves, keyed by face index `"0"`..`"5"`, each a list
/// of `[time_s, raw]` breakpoints relative to `start_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeDoc {
    #[serde(default)]
    pub start_s: f64,
    pub duration_s: f64,
    pub faces: BTreeMap<String, Vec<[f64; 2]>>,
}

impl EnvelopeDoc {
    /// Emulated frames as trace records at absolute times.
    pub fn records(&self) -> Result<Vec<TraceRecord>, DocError> {
        let mut env = Envelope::default();
        for (key, points) in &self.faces {
            let path = format!("envelope.faces.{key}");
            let face: usize = key.parse().map_err(|_| DocError::invalid(&path, "face key must be 0..5"))?;
            if face >= 6 {
                return Err(DocError::invalid(&path, "face key must be 0..5"));
            }
            let curve = Curve::new(points.iter().map(|p| (p[0], p[1])).collect())
                .ok_or_else(|| DocError::invalid(&path, "breakpoints must be finite and sorted by time"))?;
            env.faces[face] = curve;
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(DocError::invalid("envelope.duration_s", "must be a finite duration >= 0"));
        }
        if !(self.start_s >= 0.0 && self.start_s.is_finite()) {
            return Err(DocError::invalid("envelope.start_s", "must be a finite time >= 0"));
        }
        Ok(emulate_stream(&env, self.duration_s)
            .into_iter()
            .map(|f| TraceRecord {
                t: self.start_s + f.t_ms as f64 / 1000.0,
                input: InputMsg::PressureFrame { seq: f.seq, t_ms: f.t_ms, raw: f.raw },
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_file: Option<PathBuf>,
    #[serde(default)]
    pub timeline: TimelineDoc,
    #[serde(default)]
    pub fov: FovDoc,
    #[serde(default = "default_horizon")]
    pub horizon_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_on: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_off: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<VolumeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_positions: Option<BTreeMap<String, [f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_distance: Option<f64>,
}

fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>, DocError> {
    let text = fs::read_to_string(path).map_err(|e| DocError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(line)
            .map_err(|e| DocError::invalid(format!("{}:{}", path.display(), i + 1), e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

impl ScriptDoc {
    /// Resolves file references relative to `base` and builds the script.
    pub fn to_script(&self, base: &Path) -> Result<TaskScript, DocError> {
        let scene = match (&self.scene, &self.scene_file) {
            (Some(doc), None) => doc.to_scene().map_err(|e| match e {
                DocError::Invalid { path, message } => DocError::Invalid { path: format!("scene.{path}"), message },
                other => other,
            })?,
            (None, Some(file)) => crate::doc::load_scene(&base.join(file))?,
            _ => return Err(DocError::invalid("scene", "give exactly one of `scene` and `scene_file`")),
        };
        let mut records = self.trace.clone();
        if let Some(file) = &self.trace_file {
            records.extend(read_trace_file(&base.join(file))?);
        }
        for (i, w) in records.windows(2).enumerate() {
            if w[1].t < w[0].t {
                return Err(DocError::invalid(format!("trace[{}]", i + 1), "goes back in time"));
            }
        }
        if let Some(env) = &self.envelope {
            records.extend(env.records()?);
            // stable: trace records stay ahead of frames at equal times
            records.sort_by(|a, b| a.t.total_cmp(&b.t));
        }
        let trace: Vec<InputEvent> = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.to_event().map_err(|e| match e {
                    DocError::Invalid { path, message } => {
                        DocError::Invalid { path: format!("trace[{i}].{path}"), message }
                    }
                    other => other,
                })
            })
            .collect::<Result<_, _>>()?;

        let defaults = Thresholds::default();
        let thresholds = match (self.theta_on, self.theta_off) {
            (None, None) => Ok(defaults),
            (Some(on), None) => Thresholds::with_on(on),
            (on, Some(off)) => Thresholds::new(on.unwrap_or(defaults.theta_on()), off),
        }
        .map_err(|e| DocError::invalid("theta_on/theta_off", e.to_string()))?;
        let dt = self.dt.unwrap_or(DEFAULT_DT);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DocError::invalid("dt", format!("must be > 0 (got {dt})")));
        }
        let reported = self
            .reported_positions
            .as_ref()
            .map(|m| m.iter().map(|(k, v)| (k.clone(), vec3(*v))).collect::<BTreeMap<String, Vec3>>());
        Ok(TaskScript {
            scene,
            volume: self.volume.clone().unwrap_or_default().to_volume()?,
            head: self.head.map(vec3).unwrap_or(DEFAULT_HEAD),
            trace,
            timeline: self.timeline.to_timeline()?,
            fov: self.fov.into(),
            horizon: self.horizon_s,
            thresholds,
            calibration: self.calibration.clone().unwrap_or_default().to_calibration()?,
            dt,
            reported,
            norm_distance: self.norm_distance,
        })
    }

    /// Inline document for a script (the trace is written inline).
    pub fn from_script(s: &TaskScript) -> ScriptDoc {
        let default_cal = CalibrationDoc::default();
        let cal = CalibrationDoc::from_calibration(&s.calibration);
        let defaults = Thresholds::default();
        ScriptDoc {
            scene: Some(SceneDoc::from_scene(&s.scene)),
            scene_file: None,
            timeline: TimelineDoc::from_timeline(&s.timeline),
            fov: s.fov.into(),
            horizon_s: s.horizon,
            dt: (s.dt != DEFAULT_DT).then_some(s.dt),
            theta_on: (s.thresholds != defaults).then(|| s.thresholds.theta_on()),
            theta_off: (s.thresholds != defaults).then(|| s.thresholds.theta_off()),
            calibration: (cal != default_cal).then_some(cal),
            volume: Some(VolumeDoc::from_volume(&s.volume)),
            head: Some(s.head.to_array()),
            trace: s.trace.iter().map(TraceRecord::from_event).collect(),
            trace_file: None,
            envelope: None,
            reported_positions: s.reported.as_ref().map(|m| m.iter().map(|(k, v)| (k.clone(), v.to_array())).collect()),
            norm_distance: s.norm_distance,
        }
    }
}

pub fn load_script(path: &Path) -> Result<TaskScript, DocError> {
    let text = fs::read_to_string(path).map_err(|e| DocError::io(path, e))?;
    let doc: ScriptDoc =
        serde_json::from_str(&text).map_err(|e| DocError::invalid(path.display().to_string(), e.to_string()))?;
    doc.to_script(path.parent().unwrap_or(Path::new(".")))
}

/// Run metrics as written by `score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsDoc {
    pub fov: FovDoc,
    pub targets: usize,
    pub completed: usize,
    pub target_appeared_s: Vec<Option<f64>>,
    pub completion_time_s: Vec<Option<f64>>,
    pub hints_used: usize,
    pub grasp_count: u32,
    pub release_count: u32,
    pub sensor_errors: u32,
    pub timed_out: bool,
    pub end_time_s: f64,
    pub recall_score: Option<f64>,
    pub final_hash: String,
}

impl MetricsDoc {
    pub fn new(m: &RunMetrics) -> MetricsDoc {
        MetricsDoc {
            fov: m.fov.into(),
            targets: m.completion_times.len(),
            completed: m.completion_times.iter().filter(|c| c.is_some()).count(),
            target_appeared_s: m.target_appeared.clone(),
            completion_time_s: m.completion_times.clone(),
            hints_used: m.hints_used,
            grasp_count: m.grasp_count,
            release_count: m.release_count,
            sensor_errors: m.sensor_errors,
            timed_out: m.timed_out,
            end_time_s: m.end_time,
            recall_score: m.recall_score,
            final_hash: hash_hex(m.final_hash),
        }
    }
}

/// Flat CSV row; per-target lists are `;`-separated, missing values empty.
#[derive(Debug, Serialize)]
struct MetricsRow {
    fov: &'static str,
    targets: usize,
    completed: usize,
    target_appeared_s: String,
    completion_time_s: String,
    hints_used: usize,
    grasp_count: u32,
    release_count: u32,
    sensor_errors: u32,
    timed_out: bool,
    end_time_s: f64,
    recall_score: Option<f64>,
    final_hash: String,
}

fn join_times(v: &[Option<f64>]) -> String {
    v.iter().map(|t| t.map(|t| t.to_string()).unwrap_or_default()).collect::<Vec<_>>().join(";")
}

pub fn write_metrics_csv(out: impl Write, metrics: &[RunMetrics]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for m in metrics {
        w.serialize(MetricsRow {
            fov: m.fov.as_str(),
            targets: m.completion_times.len(),
            completed: m.completion_times.iter().filter(|c| c.is_some()).count(),
            target_appeared_s: join_times(&m.target_appeared),
            completion_time_s: join_times(&m.completion_times),
            hints_used: m.hints_used,
            grasp_count: m.grasp_count,
            release_count: m.release_count,
            sensor_errors: m.sensor_errors,
            timed_out: m.timed_out,
            end_time_s: m.end_time,
            recall_score: m.recall_score,
            final_hash: hash_hex(m.final_hash),
        })?;
    }
    w.flush()?;
    Ok(())
}
