//! Scripted study scenarios: floor targets, the hint ladder, target
//! timelines, recall scoring, and deterministic replay of an input trace
//! into run metrics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::interaction::Thresholds;
use crate::physics::{PhysicsConfig, DEFAULT_DT};
use crate::scene::{Scene, TangibleVolume, VirtualObject};
use crate::sensor::{encode_frame, Calibration, FrameDecoder};
use crate::session::{InputError, InputEvent, InputKind, Session, SessionConfig, SessionError, StateSnapshot};
use crate::spatial::Vec3;

/// A circle on the floor that a specific object must be brought into.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub center: Vec3,
    pub radius: f64,
    pub required_object: String,
    pub silhouette_label: String,
}

/// True when the object is settled inside the target circle: horizontal
/// center distance within the radius, not held, and its body asleep.
pub fn check_target(obj: &VirtualObject, target: &TargetSpec, grasped: bool, asleep: bool) -> bool {
    let d = obj.position() - target.center;
    let horizontal = libm::sqrt(d.x * d.x + d.z * d.z);
    horizontal <= target.radius && !grasped && asleep
}

pub const HINTS: [&str; 3] =
    ["Put the cube onto the apple", "Press the cube to grab the apple", "Move the cube while maintaining the pressure"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HintLadder {
    revealed: usize,
}

impl HintLadder {
    /// Reveals the next hint, or `None` once all are shown.
    pub fn reveal(&mut self) -> Option<&'static str> {
        let hint = HINTS.get(self.revealed)?;
        self.revealed += 1;
        Some(hint)
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed
    }

    pub fn revealed(&self) -> &'static [&'static str] {
        &HINTS[..self.revealed]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FovCondition {
    /// Objects visible only through the cube.
    #[default]
    Narrow,
    /// Objects also visible outside the cube.
    Wide,
}

impl FovCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            FovCondition::Narrow => "narrow",
            FovCondition::Wide => "wide",
        }
    }
}

/// When scene targets appear. Target `0` appears `delays[0]` seconds
/// after the start; target `k` appears `delays[k]` seconds after target
/// `k - 1` is completed. The run ends `final_delay` seconds after the
/// last completion (immediately when `None`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    pub delays: Vec<f64>,
    pub final_delay: Option<f64>,
}

impl Timeline {
    pub fn study_two() -> Timeline {
        Timeline { delays: alloc::vec![15.0, 10.0, 12.0], final_delay: Some(20.0) }
    }

    pub fn delay(&self, index: usize) -> f64 {
        self.delays.get(index).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecallError {
    MismatchedIds,
    Empty,
    InvalidNorm(f64),
}

impl fmt::Display for RecallError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecallError::MismatchedIds => f.write_str("reported and actual object sets differ"),
            RecallError::Empty => f.write_str("no objects to score"),
            RecallError::InvalidNorm(n) => write!(f, "normalization distance must be > 0 (got {n})"),
        }
    }
}

impl core::error::Error for RecallError {}

/// Mean per-object closeness `max(0, 1 - error / norm_distance)`, in `[0, 1]`.
pub fn recall_score(
    reported: &BTreeMap<String, Vec3>,
    actual: &BTreeMap<String, Vec3>,
    norm_distance: f64,
) -> Result<f64, RecallError> {
    if !(norm_distance > 0.0 && norm_distance.is_finite()) {
        return Err(RecallError::InvalidNorm(norm_distance));
    }
    if reported.len() != actual.len() || !reported.keys().all(|k| actual.contains_key(k)) {
        return Err(RecallError::MismatchedIds);
    }
    if actual.is_empty() {
        return Err(RecallError::Empty);
    }
    let total: f64 = actual.iter().map(|(id, a)| (1.0 - reported[id].distance(*a) / norm_distance).max(0.0)).sum();
    Ok(total / actual.len() as f64)
}

/// Diagonal of the axis-aligned bounding box of the given positions, or
/// `None` when it is degenerate.
pub fn default_norm_distance(positions: &BTreeMap<String, Vec3>) -> Option<f64> {
    let mut it = positions.values();
    let first = *it.next()?;
    let (mut lo, mut hi) = (first, first);
    for p in it {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    let d = (hi - lo).length();
    (d > 0.0).then_some(d)
}

/// Everything needed to replay one study run.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskScript {
    pub scene: Scene,
    pub volume: TangibleVolume,
    pub head: Vec3,
    /// Timestamped inputs; times must be nondecreasing.
    pub trace: Vec<InputEvent>,
    pub timeline: Timeline,
    pub fov: FovCondition,
    /// Simulated seconds after which an unfinished run times out.
    pub horizon: f64,
    pub thresholds: Thresholds,
    pub calibration: Calibration,
    pub dt: f64,
    /// Positions recalled after the run, scored against the final scene.
    pub reported: Option<BTreeMap<String, Vec3>>,
    pub norm_distance: Option<f64>,
}

impl TaskScript {
    pub fn new(scene: Scene, trace: Vec<InputEvent>, timeline: Timeline) -> TaskScript {
        TaskScript {
            scene,
            volume: TangibleVolume::default(),
            head: crate::session::DEFAULT_HEAD,
            trace,
            timeline,
            fov: FovCondition::Narrow,
            horizon: 300.0,
            thresholds: Thresholds::default(),
            calibration: Calibration::default(),
            dt: DEFAULT_DT,
            reported: None,
            norm_distance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub fov: FovCondition,
    /// Simulated time each target appeared, in target order.
    pub target_appeared: Vec<Option<f64>>,
    /// Seconds from appearance to completion, per target.
    pub completion_times: Vec<Option<f64>>,
    pub hints_used: usize,
    pub grasp_count: u32,
    pub release_count: u32,
    pub sensor_errors: u32,
    pub timed_out: bool,
    pub end_time: f64,
    pub recall_score: Option<f64>,
    pub final_hash: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    TraceNotMonotone { index: usize },
    UnknownObject(String),
    InvalidHorizon(f64),
    Input(InputError),
    Session(SessionError),
    Recall(RecallError),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::TraceNotMonotone { index } => write!(f, "trace record {index} goes back in time"),
            ScenarioError::UnknownObject(id) => write!(f, "script references unknown object `{id}`"),
            ScenarioError::InvalidHorizon(h) => write!(f, "horizon must be > 0 (got {h})"),
            ScenarioError::Input(e) => write!(f, "trace input rejected: {e}"),
            ScenarioError::Session(e) => write!(f, "{e}"),
            ScenarioError::Recall(e) => write!(f, "recall scoring failed: {e}"),
        }
    }
}

impl core::error::Error for ScenarioError {}

impl From<SessionError> for ScenarioError {
    fn from(e: SessionError) -> Self {
        ScenarioError::Session(e)
    }
}

impl From<InputError> for ScenarioError {
    fn from(e: InputError) -> Self {
        ScenarioError::Input(e)
    }
}

pub fn run_scenario(script: &TaskScript) -> Result<RunMetrics, ScenarioError> {
    run_scenario_observed(script, |_| {})
}

/// Replays `script` and calls `observe` with every tick's snapshot.
///
/// Pressure records are encoded onto the sensor wire and decoded again,
/// so replays exercise the same framing as a live board.
pub fn run_scenario_observed(
    script: &TaskScript,
    mut observe: impl FnMut(&StateSnapshot),
) -> Result<RunMetrics, ScenarioError> {
    if !(script.horizon > 0.0 && script.horizon.is_finite()) {
        return Err(ScenarioError::InvalidHorizon(script.horizon));
    }
    if let Some(index) = script.trace.windows(2).position(|w| w[1].time < w[0].time) {
        return Err(ScenarioError::TraceNotMonotone { index: index + 1 });
    }
    if let Some(reported) = &script.reported {
        if let Some(id) = reported.keys().find(|id| !script.scene.contains_id(id)) {
            return Err(ScenarioError::UnknownObject(id.clone()));
        }
        if script.scene.objects.iter().any(|o| !reported.contains_key(&o.id)) {
            return Err(ScenarioError::Recall(RecallError::MismatchedIds));
        }
    }

    let config = SessionConfig {
        dt: script.dt,
        thresholds: script.thresholds,
        physics: PhysicsConfig::default(),
        calibration: script.calibration,
        volume: script.volume,
        head: script.head,
        timeline: script.timeline.clone(),
        fov: script.fov,
        headless: true,
        ..SessionConfig::default()
    };
    let mut session = Session::new(script.scene.clone(), config)?;

    let mut decoder = FrameDecoder::new();
    let mut seq: u32 = 0;
    let mut sensor_errors = 0u32;
    for ev in &script.trace {
        match &ev.kind {
            InputKind::Pressure(frame) => {
                let mut frame = *frame;
                frame.seq = seq;
                frame.t_ms = libm::round(ev.time * 1000.0) as u64;
                seq = seq.wrapping_add(1);
                let line = encode_frame(&frame).map_err(|_| InputError::RawOutOfRange)?;
                for decoded in decoder.decode(line.as_bytes()) {
                    match decoded {
                        Ok(f) => session.push_input(InputEvent::new(f.t_ms as f64 / 1000.0, InputKind::Pressure(f)))?,
                        Err(_) => sensor_errors += 1,
                    }
                }
            }
            _ => session.push_input(ev.clone())?,
        }
    }

    let max_ticks = libm::ceil(script.horizon / script.dt) as u64;
    let mut last = session.snapshot();
    while !session.finished() && session.tick_count() < max_ticks {
        last = session.tick()?;
        observe(&last);
    }

    let recall_score = match &script.reported {
        Some(reported) => {
            let actual: BTreeMap<String, Vec3> =
                session.scene().objects.iter().map(|o| (o.id.clone(), o.position())).collect();
            let norm = script.norm_distance.or_else(|| default_norm_distance(&actual)).unwrap_or(1.0);
            Some(recall_score(reported, &actual, norm).map_err(ScenarioError::Recall)?)
        }
        None => None,
    };

    let progress = session.timeline_progress();
    Ok(RunMetrics {
        fov: script.fov,
        target_appeared: progress.appeared.clone(),
        completion_times: progress.completion_times.clone(),
        hints_used: session.hints().revealed_count(),
        grasp_count: session.grasp_count(),
        release_count: session.release_count(),
        sensor_errors,
        timed_out: !session.finished(),
        end_time: last.time,
        recall_score,
        final_hash: last.state_hash(),
    })
}
