//! The fixed-step simulation loop.
//!
//! A [`Session`] owns the only mutable copy of the simulation state. Inputs
//! are queued with a timestamp and folded in at the first tick whose time
//! reaches them (ties keep arrival order). Each tick then runs, in order:
//! grasp state machine, grasp attachment, physics, target timeline, and
//! (unless headless) camera construction.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::hash::StateHasher;
use crate::interaction::{
    apply_grasp, step_grasp, GraspEvent, GraspPhase, GraspState, InteractionError, Pressures, Thresholds,
};
use crate::physics::{on_release, step_physics, Bodies, PhysicsConfig, DEFAULT_DT};
use crate::projection::{volume_cameras, FaceCamera, DEFAULT_FAR, DEFAULT_NEAR, FACE_COUNT};
use crate::scene::{Scene, SceneError, TangibleVolume};
use crate::sensor::{normalize, Calibration, PressureFrame, RAW_MAX};
use crate::spatial::{Pose, Vec3};
use crate::study::{check_target, FovCondition, HintLadder, Timeline};

/// Default viewing point: seated at a desk, looking down at the origin.
pub const DEFAULT_HEAD: Vec3 = Vec3::new(0.0, 0.45, 0.6);

/// Slack when comparing input timestamps against tick times.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub dt: f64,
    pub thresholds: Thresholds,
    pub physics: PhysicsConfig,
    pub calibration: Calibration,
    /// Initial volume pose, size and bezel.
    pub volume: TangibleVolume,
    pub head: Vec3,
    pub timeline: Timeline,
    pub fov: FovCondition,
    pub headless: bool,
    pub near: f64,
    pub far: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            dt: DEFAULT_DT,
            thresholds: Thresholds::default(),
            physics: PhysicsConfig::default(),
            calibration: Calibration::default(),
            volume: TangibleVolume::default(),
            head: DEFAULT_HEAD,
            timeline: Timeline::default(),
            fov: FovCondition::Narrow,
            headless: false,
            near: DEFAULT_NEAR,
            far: DEFAULT_FAR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputKind {
    VolumePose(Pose),
    Head(Vec3),
    /// Normalized pressure for one face, bypassing calibration.
    FacePressure {
        face: usize,
        value: f64,
    },
    /// A raw sensor frame; normalized with the session calibration.
    Pressure(PressureFrame),
    HintPress,
    SetFov(FovCondition),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputEvent {
    /// Simulated seconds since session start.
    pub time: f64,
    pub kind: InputKind,
}

impl InputEvent {
    pub fn new(time: f64, kind: InputKind) -> InputEvent {
        InputEvent { time, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputError {
    InvalidTime(f64),
    NonFinitePose,
    NonFiniteHead,
    FaceOutOfRange(usize),
    PressureOutOfRange,
    RawOutOfRange,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputError::InvalidTime(t) => write!(f, "input time {t} is not a finite non-negative number"),
            InputError::NonFinitePose => f.write_str("volume pose is not finite"),
            InputError::NonFiniteHead => f.write_str("head position is not finite"),
            InputError::FaceOutOfRange(i) => write!(f, "face index {i} out of range 0..{FACE_COUNT}"),
            InputError::PressureOutOfRange => f.write_str("pressure outside [0, 1]"),
            InputError::RawOutOfRange => write!(f, "raw pressure above {RAW_MAX}"),
        }
    }
}

impl core::error::Error for InputError {}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionError {
    InvalidDt(f64),
    InvalidClipPlanes { near: f64, far: f64 },
    Scene(SceneError),
    Interaction(InteractionError),
}

impl fmt::Display for SessionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionError::InvalidDt(dt) => write!(f, "dt must be > 0 (got {dt})"),
            SessionError::InvalidClipPlanes { near, far } => write!(f, "invalid clip planes near={near} far={far}"),
            SessionError::Scene(e) => write!(f, "invalid scene: {e}"),
            SessionError::Interaction(e) => write!(f, "interaction fault: {e}"),
        }
    }
}

impl core::error::Error for SessionError {}

impl From<SceneError> for SessionError {
    fn from(e: SceneError) -> Self {
        SessionError::Scene(e)
    }
}

impl From<InteractionError> for SessionError {
    fn from(e: InteractionError) -> Self {
        SessionError::Interaction(e)
    }
}

/// Notable things that happened during a tick.
#[derive(Debug, Clone, PartialEq)]
pub enum SessionEvent {
    Grasp { id: String },
    Release { id: String },
    TargetAppeared { index: usize, object: String, silhouette: String },
    TargetComplete { index: usize, object: String, elapsed: f64 },
    HintRevealed { index: usize, text: &'static str },
    Finished,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimelineProgress {
    /// Index of the next target to appear.
    next: usize,
    pending_tick: Option<u64>,
    active: Option<(usize, u64)>,
    end_tick: Option<u64>,
    pub finished: bool,
    pub appeared: Vec<Option<f64>>,
    pub completion_times: Vec<Option<f64>>,
}

impl TimelineProgress {
    pub fn active_target(&self) -> Option<usize> {
        self.active.map(|(i, _)| i)
    }

    pub fn completed(&self) -> usize {
        self.completion_times.iter().filter(|c| c.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectState {
    pub id: String,
    pub label: String,
    pub pose: Pose,
    pub radius: f64,
    pub asleep: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub tick: u64,
    pub time: f64,
    pub volume: TangibleVolume,
    pub head: Vec3,
    pub objects: Vec<ObjectState>,
    pub phase: GraspPhase,
    pub bimanual: bool,
    pub pressures: Pressures,
    pub active_target: Option<usize>,
    pub completed_targets: usize,
    pub hints_revealed: usize,
    pub finished: bool,
    /// Rendering flag only; not part of the state hash.
    pub fov: FovCondition,
    /// Empty in headless mode; not part of the state hash.
    pub cameras: Vec<FaceCamera>,
}

impl StateSnapshot {
    /// Object highlighted for the user: the candidate, or the grasped object.
    pub fn outline_id(&self) -> Option<&str> {
        match &self.phase {
            GraspPhase::NoCandidate => None,
            GraspPhase::Candidate(id) | GraspPhase::Grasped(id) => Some(id),
        }
    }

    pub fn state_hash(&self) -> u64 {
        state_hash(self)
    }
}

/// Digest of the simulation state in a snapshot.
///
/// Field order: tick, volume (translation, rotation wxyz, half extent,
/// bezel), head, object count, then per object id/translation/rotation/
/// asleep, grasp phase tag (0 none, 1 candidate, 2 grasped) and id,
/// bimanual, six pressures, active target (-1 for none), completed
/// targets, hints revealed, finished. Reals are quantized to 1e-9.
/// Cameras and the FoV flag are derived presentation data and excluded.
pub fn state_hash(s: &StateSnapshot) -> u64 {
    let mut h = StateHasher::new();
    h.u64(s.tick);
    hash_pose(&mut h, &s.volume.pose);
    h.real(s.volume.half_extent);
    h.real(s.volume.bezel_fraction);
    hash_vec(&mut h, s.head);
    h.u64(s.objects.len() as u64);
    for o in &s.objects {
        h.str(&o.id);
        hash_pose(&mut h, &o.pose);
        h.bool(o.asleep);
    }
    match &s.phase {
        GraspPhase::NoCandidate => h.u8(0),
        GraspPhase::Candidate(id) => {
            h.u8(1);
            h.str(id);
        }
        GraspPhase::Grasped(id) => {
            h.u8(2);
            h.str(id);
        }
    }
    h.bool(s.bimanual);
    for p in s.pressures {
        h.real(p);
    }
    h.i64(s.active_target.map_or(-1, |i| i as i64));
    h.u64(s.completed_targets as u64);
    h.u64(s.hints_revealed as u64);
    h.bool(s.finished);
    h.finish()
}

fn hash_vec(h: &mut StateHasher, v: Vec3) {
    h.real(v.x);
    h.real(v.y);
    h.real(v.z);
}

fn hash_pose(h: &mut StateHasher, p: &Pose) {
    hash_vec(h, p.translation);
    h.real(p.rotation.w);
    h.real(p.rotation.x);
    h.real(p.rotation.y);
    h.real(p.rotation.z);
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    scene: Scene,
    volume: TangibleVolume,
    head: Vec3,
    grasp: GraspState,
    bodies: Bodies,
    pressures: Pressures,
    hints: HintLadder,
    fov: FovCondition,
    progress: TimelineProgress,
    tick: u64,
    queue: Vec<InputEvent>,
    events: Vec<SessionEvent>,
    grasp_count: u32,
    release_count: u32,
}

impl Session {
    pub fn new(scene: Scene, config: SessionConfig) -> Result<Session, SessionError> {
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(SessionError::InvalidDt(config.dt));
        }
        if !(config.near > 0.0 && config.far > config.near) {
            return Err(SessionError::InvalidClipPlanes { near: config.near, far: config.far });
        }
        scene.validate()?;
        let volume = config.volume;
        TangibleVolume::new(volume.pose, volume.half_extent, volume.bezel_fraction)?;

        let n = scene.targets.len();
        let mut progress = TimelineProgress {
            appeared: alloc::vec![None; n],
            completion_times: alloc::vec![None; n],
            ..TimelineProgress::default()
        };
        if n > 0 {
            progress.pending_tick = Some(ticks_for(config.timeline.delay(0), config.dt));
        }

        let mut session = Session {
            bodies: Bodies::for_scene(&scene),
            grasp: GraspState::new(config.thresholds),
            volume,
            head: config.head,
            pressures: [0.0; FACE_COUNT],
            hints: HintLadder::default(),
            fov: config.fov,
            progress,
            tick: 0,
            queue: Vec::new(),
            events: Vec::new(),
            grasp_count: 0,
            release_count: 0,
            scene,
            config,
        };
        // the outline is visible before the first tick
        session.grasp = step_grasp(&session.grasp, &session.pressures, &session.scene, &session.volume)?;
        Ok(session)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn volume(&self) -> &TangibleVolume {
        &self.volume
    }

    pub fn grasp_state(&self) -> &GraspState {
        &self.grasp
    }

    pub fn bodies(&self) -> &Bodies {
        &self.bodies
    }

    pub fn hints(&self) -> &HintLadder {
        &self.hints
    }

    pub fn timeline_progress(&self) -> &TimelineProgress {
        &self.progress
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    pub fn finished(&self) -> bool {
        self.progress.finished
    }

    pub fn grasp_count(&self) -> u32 {
        self.grasp_count
    }

    pub fn release_count(&self) -> u32 {
        self.release_count
    }

    pub fn set_headless(&mut self, headless: bool) {
        self.config.headless = headless;
    }

    /// Number of inputs waiting for their tick.
    pub fn queued_inputs(&self) -> usize {
        self.queue.len()
    }

    /// Validates and enqueues an input.
    pub fn push_input(&mut self, event: InputEvent) -> Result<(), InputError> {
        validate_input(&event)?;
        let at = self.queue.partition_point(|e| e.time <= event.time);
        self.queue.insert(at, event);
        Ok(())
    }

    /// Events produced since the last call.
    pub fn drain_events(&mut self) -> Vec<SessionEvent> {
        core::mem::take(&mut self.events)
    }

    /// Advances one fixed step and returns the resulting snapshot.
    pub fn tick(&mut self) -> Result<StateSnapshot, SessionError> {
        self.advance()?;
        Ok(self.snapshot())
    }

    /// Advances one fixed step.
    pub fn advance(&mut self) -> Result<(), SessionError> {
        self.tick += 1;
        let now = self.time();

        // 1. inputs
        let due = self.queue.partition_point(|e| e.time <= now + TIME_EPS);
        let inputs: Vec<InputEvent> = self.queue.drain(..due).collect();
        for ev in inputs {
            self.apply_input(ev.kind);
        }

        // 2. grasp state machine
        let before = self.grasp.phase.clone();
        self.grasp = step_grasp(&self.grasp, &self.pressures, &self.scene, &self.volume)?;
        match GraspEvent::between(&before, &self.grasp.phase) {
            Some(GraspEvent::Grasp(id)) => {
                self.grasp_count += 1;
                self.events.push(SessionEvent::Grasp { id });
            }
            Some(GraspEvent::Release(id)) => {
                self.release_count += 1;
                on_release(&id, &mut self.bodies);
                self.events.push(SessionEvent::Release { id });
            }
            None => {}
        }

        // 3. attachment
        if self.grasp.phase.is_grasped() {
            apply_grasp(&self.grasp, &self.volume, &mut self.scene)?;
        }

        // 4. physics
        let grasped = self.grasp.phase.grasped_id().map(String::from);
        step_physics(&mut self.scene, &mut self.bodies, grasped.as_deref(), &self.config.physics, self.config.dt);

        // 5. targets
        self.update_timeline(grasped.as_deref());
        Ok(())
    }

    fn apply_input(&mut self, kind: InputKind) {
        match kind {
            InputKind::VolumePose(pose) => self.volume.pose = pose,
            InputKind::Head(p) => self.head = p,
            InputKind::FacePressure { face, value } => self.pressures[face] = value,
            InputKind::Pressure(frame) => self.pressures = normalize(&frame, &self.config.calibration),
            InputKind::HintPress => {
                let index = self.hints.revealed_count();
                if let Some(text) = self.hints.reveal() {
                    self.events.push(SessionEvent::HintRevealed { index, text });
                }
            }
            InputKind::SetFov(fov) => self.fov = fov,
        }
    }

    fn update_timeline(&mut self, grasped: Option<&str>) {
        if self.progress.finished {
            return;
        }
        let dt = self.config.dt;
        let now = self.tick;
        if let Some(at) = self.progress.pending_tick {
            if now >= at {
                let index = self.progress.next;
                let target = &self.scene.targets[index];
                self.progress.pending_tick = None;
                self.progress.active = Some((index, now));
                self.progress.appeared[index] = Some(now as f64 * dt);
                self.events.push(SessionEvent::TargetAppeared {
                    index,
                    object: target.required_object.clone(),
                    silhouette: target.silhouette_label.clone(),
                });
            }
        }
        if let Some((index, since)) = self.progress.active {
            let target = &self.scene.targets[index];
            let done = self.scene.object(&target.required_object).is_some_and(|obj| {
                check_target(obj, target, grasped == Some(obj.id.as_str()), self.bodies.is_asleep(&obj.id))
            });
            if done {
                let elapsed = (now - since) as f64 * dt;
                self.progress.completion_times[index] = Some(elapsed);
                self.progress.active = None;
                self.events.push(SessionEvent::TargetComplete {
                    index,
                    object: target.required_object.clone(),
                    elapsed,
                });
                let next = index + 1;
                self.progress.next = next;
                if next < self.scene.targets.len() {
                    self.progress.pending_tick = Some(now + ticks_for(self.config.timeline.delay(next), dt));
                } else {
                    let tail = self.config.timeline.final_delay.unwrap_or(0.0);
                    self.progress.end_tick = Some(now + ticks_for(tail, dt));
                }
            }
        }
        if let Some(end) = self.progress.end_tick {
            if now >= end {
                self.progress.finished = true;
                self.events.push(SessionEvent::Finished);
            }
        }
    }

    pub fn snapshot(&self) -> StateSnapshot {
        let objects = self
            .scene
            .objects
            .iter()
            .map(|o| ObjectState {
                id: o.id.clone(),
                label: o.label.clone(),
                pose: o.pose,
                radius: o.radius,
                asleep: self.bodies.is_asleep(&o.id),
            })
            .collect();
        let cameras = if self.config.headless {
            Vec::new()
        } else {
            volume_cameras(&self.volume, self.head, self.config.near, self.config.far)
        };
        StateSnapshot {
            tick: self.tick,
            time: self.time(),
            volume: self.volume,
            head: self.head,
            objects,
            phase: self.grasp.phase.clone(),
            bimanual: self.grasp.bimanual,
            pressures: self.pressures,
            active_target: self.progress.active_target(),
            completed_targets: self.progress.completed(),
            hints_revealed: self.hints.revealed_count(),
            finished: self.progress.finished,
            fov: self.fov,
            cameras,
        }
    }
}

fn ticks_for(seconds: f64, dt: f64) -> u64 {
    if seconds > 0.0 {
        libm::round(seconds / dt) as u64
    } else {
        0
    }
}

fn validate_input(event: &InputEvent) -> Result<(), InputError> {
    if !(event.time >= 0.0 && event.time.is_finite()) {
        return Err(InputError::InvalidTime(event.time));
    }
    match &event.kind {
        InputKind::VolumePose(p) if !p.is_finite() => Err(InputError::NonFinitePose),
        InputKind::VolumePose(p) if (p.rotation.norm() - 1.0).abs() > 1e-6 => Err(InputError::NonFinitePose),
        InputKind::Head(h) if !h.is_finite() => Err(InputError::NonFiniteHead),
        InputKind::FacePressure { face, .. } if *face >= FACE_COUNT => Err(InputError::FaceOutOfRange(*face)),
        InputKind::FacePressure { value, .. } if !(0.0..=1.0).contains(value) => Err(InputError::PressureOutOfRange),
        InputKind::Pressure(f) if f.raw.iter().any(|&v| v > RAW_MAX) => Err(InputError::RawOutOfRange),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::VirtualObject;
    use crate::study::TargetSpec;
    use alloc::vec;

    fn apple_scene() -> Scene {
        Scene {
            objects: vec![VirtualObject::new(
                "apple",
                "apple",
                Pose::from_translation(Vec3::new(0.3, 0.05, 0.0)),
                0.03,
                true,
            )],
            targets: vec![TargetSpec {
                center: Vec3::new(0.0, 0.0, 0.3),
                radius: 0.08,
                required_object: "apple".into(),
                silhouette_label: "apple".into(),
            }],
            ..Scene::default()
        }
    }

    #[test]
    fn empty_session_is_a_fixed_point() {
        let mut s =
            Session::new(Scene::default(), SessionConfig { headless: true, ..SessionConfig::default() }).unwrap();
        let first = s.tick().unwrap();
        for _ in 0..500 {
            let snap = s.tick().unwrap();
            let mut a = snap.clone();
            a.tick = first.tick;
            a.time = first.time;
            assert_eq!(a.state_hash(), first.state_hash());
        }
    }

    #[test]
    fn inputs_fold_at_their_tick_in_arrival_order() {
        let mut s = Session::new(Scene::default(), SessionConfig::default()).unwrap();
        let t = 10.0 / 120.0;
        s.push_input(InputEvent::new(t, InputKind::Head(Vec3::new(1.0, 1.0, 1.0)))).unwrap();
        s.push_input(InputEvent::new(t, InputKind::Head(Vec3::new(2.0, 1.0, 1.0)))).unwrap();
        s.push_input(InputEvent::new(0.0, InputKind::Head(Vec3::new(0.0, 1.0, 1.0)))).unwrap();
        s.tick().unwrap();
        assert_eq!(s.snapshot().head, Vec3::new(0.0, 1.0, 1.0));
        for _ in 0..8 {
            s.tick().unwrap();
        }
        assert_eq!(s.snapshot().head, Vec3::new(0.0, 1.0, 1.0));
        s.tick().unwrap();
        assert_eq!(s.snapshot().head, Vec3::new(2.0, 1.0, 1.0));
    }

    #[test]
    fn invalid_inputs_rejected_at_ingestion() {
        let mut s = Session::new(Scene::default(), SessionConfig::default()).unwrap();
        let bad = [
            InputEvent::new(-1.0, InputKind::HintPress),
            InputEvent::new(f64::NAN, InputKind::HintPress),
            InputEvent::new(0.0, InputKind::FacePressure { face: 6, value: 0.5 }),
            InputEvent::new(0.0, InputKind::FacePressure { face: 0, value: 1.5 }),
            InputEvent::new(0.0, InputKind::Head(Vec3::new(f64::INFINITY, 0.0, 0.0))),
            InputEvent::new(0.0, InputKind::Pressure(PressureFrame::new(0, 0, [2000, 0, 0, 0, 0, 0]))),
        ];
        for ev in bad {
            assert!(s.push_input(ev).is_err());
        }
        assert_eq!(s.queued_inputs(), 0);
    }

    #[test]
    fn hint_presses_reveal_the_ladder() {
        let mut s = Session::new(Scene::default(), SessionConfig::default()).unwrap();
        for _ in 0..4 {
            s.push_input(InputEvent::new(0.0, InputKind::HintPress)).unwrap();
        }
        s.tick().unwrap();
        let texts: Vec<&str> = s
            .drain_events()
            .into_iter()
            .filter_map(|e| match e {
                SessionEvent::HintRevealed { text, .. } => Some(text),
                _ => None,
            })
            .collect();
        assert_eq!(texts, crate::study::HINTS);
        assert_eq!(s.snapshot().hints_revealed, 3);
    }

    #[test]
    fn grasp_move_release_completes_target() {
        let mut s = Session::new(apple_scene(), SessionConfig { headless: true, ..SessionConfig::default() }).unwrap();
        let onto = Pose::from_translation(Vec3::new(0.3, 0.06, 0.0));
        let dest = Pose::from_translation(Vec3::new(0.0, 0.07, 0.3));
        s.push_input(InputEvent::new(0.0, InputKind::VolumePose(onto))).unwrap();
        s.push_input(InputEvent::new(0.5, InputKind::FacePressure { face: 4, value: 0.9 })).unwrap();
        s.push_input(InputEvent::new(1.0, InputKind::VolumePose(dest))).unwrap();
        s.push_input(InputEvent::new(1.5, InputKind::FacePressure { face: 4, value: 0.0 })).unwrap();
        let mut events = Vec::new();
        for _ in 0..600 {
            s.tick().unwrap();
            events.extend(s.drain_events());
            if s.finished() {
                break;
            }
        }
        assert!(s.finished());
        assert!(events.contains(&SessionEvent::Grasp { id: "apple".into() }));
        assert!(events.contains(&SessionEvent::Release { id: "apple".into() }));
        let apple = s.scene().object("apple").unwrap();
        assert!((apple.position().y - 0.03).abs() < 1e-9);
        assert_eq!(s.grasp_count(), 1);
        assert_eq!(s.release_count(), 1);
    }

    #[test]
    fn cameras_only_when_not_headless() {
        let mut s = Session::new(Scene::default(), SessionConfig::default()).unwrap();
        assert!(!s.snapshot().cameras.is_empty());
        let with = s.snapshot().state_hash();
        s.set_headless(true);
        assert!(s.snapshot().cameras.is_empty());
        assert_eq!(s.snapshot().state_hash(), with);
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(matches!(
            Session::new(Scene::default(), SessionConfig { dt: 0.0, ..SessionConfig::default() }),
            Err(SessionError::InvalidDt(_))
        ));
    }
}
