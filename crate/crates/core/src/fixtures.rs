//! Reference scenes and hand-authored input traces for the two study
//! tasks. Traces drive the volume like a participant who already knows
//! the technique: hover over the object, squeeze, carry, let go.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::projection::FACE_COUNT;
use crate::scene::{Scene, VirtualObject};
use crate::sensor::{PressureFrame, SAMPLE_PERIOD_MS};
use crate::session::{InputEvent, InputKind};
use crate::spatial::{Pose, Vec3};
use crate::study::{FovCondition, TargetSpec, TaskScript, Timeline};

/// Raw reading used for a firm squeeze (about 0.78 with the default
/// calibration).
pub const SQUEEZE_RAW: u16 = 800;

/// Where the volume rests between carries.
pub const PARKED: Vec3 = Vec3::new(0.0, 0.35, 0.0);

/// Builds a trace in time order.
#[derive(Debug, Clone, Default)]
pub struct TraceBuilder {
    events: Vec<InputEvent>,
}

impl TraceBuilder {
    pub fn new() -> TraceBuilder {
        TraceBuilder::default()
    }

    pub fn push(&mut self, time: f64, kind: InputKind) -> &mut Self {
        self.events.push(InputEvent::new(time, kind));
        self
    }

    pub fn move_volume(&mut self, time: f64, position: Vec3) -> &mut Self {
        self.push(time, InputKind::VolumePose(Pose::from_translation(position)))
    }

    pub fn hint(&mut self, time: f64) -> &mut Self {
        self.push(time, InputKind::HintPress)
    }

    /// Carries the object found at `from` to rest above `to`.
    ///
    /// Timeline from `start`: hover at 0, squeeze at 0.3 s, travel over
    /// 2 s in 10 Hz steps while frames keep the squeeze up, open the hand
    /// at the end and park the volume. Returns the time the hand opened.
    pub fn carry(&mut self, start: f64, from: Vec3, to: Vec3, lift: f64) -> f64 {
        self.move_volume(start, from);
        let squeeze = [SQUEEZE_RAW; FACE_COUNT];
        let grab = start + 0.3;
        self.frame(grab, squeeze);
        let steps = 20;
        for k in 1..=steps {
            let s = k as f64 / steps as f64;
            let t = grab + s * 2.0;
            // arc over neighbours, ending `lift` above the target
            let arc = 0.1 * libm::sin(core::f64::consts::PI * s);
            let p = from + (to - from) * s + Vec3::new(0.0, arc + lift * s, 0.0);
            self.move_volume(t, p);
            self.frame(t, squeeze);
        }
        let release = grab + 2.0 + 0.2;
        self.frame(release, [0; FACE_COUNT]);
        self.move_volume(release + 0.2, PARKED);
        release
    }

    fn frame(&mut self, time: f64, raw: [u16; FACE_COUNT]) {
        // seq and t_ms are restamped when the trace is replayed
        let t_ms = libm::round(time * 1000.0) as u64;
        let seq = (t_ms / SAMPLE_PERIOD_MS) as u32;
        self.push(time, InputKind::Pressure(PressureFrame::new(seq, t_ms, raw)));
    }

    pub fn build(mut self) -> Vec<InputEvent> {
        // stable: equal times keep authoring order
        self.events.sort_by(|a, b| a.time.total_cmp(&b.time));
        self.events
    }
}

fn ball(id: &str, label: &str, x: f64, z: f64, radius: f64) -> VirtualObject {
    VirtualObject::new(id, label, Pose::from_translation(Vec3::new(x, radius, z)), radius, true)
}

/// A table-top scene with an apple and one floor target.
pub fn study_one_scene() -> Scene {
    Scene {
        objects: vec![ball("apple", "apple", 0.25, 0.0, 0.035)],
        targets: vec![TargetSpec {
            center: Vec3::new(-0.25, 0.0, 0.1),
            radius: 0.06,
            required_object: "apple".into(),
            silhouette_label: "apple".into(),
        }],
        ..Scene::default()
    }
}

/// Moves the apple onto the target without asking for hints.
pub fn study_one_perfect_trace() -> Vec<InputEvent> {
    let scene = study_one_scene();
    let apple = scene.objects[0].position();
    let target = scene.targets[0].center + Vec3::new(0.0, apple.y, 0.0);
    let mut b = TraceBuilder::new();
    b.move_volume(0.0, PARKED);
    b.carry(1.0, apple, target, 0.02);
    b.build()
}

pub fn study_one_script() -> TaskScript {
    TaskScript {
        horizon: 60.0,
        ..TaskScript::new(
            study_one_scene(),
            study_one_perfect_trace(),
            Timeline { delays: vec![0.0], final_delay: None },
        )
    }
}

/// Six household objects; three of them have silhouettes on the floor.
pub fn study_two_scene() -> Scene {
    let objects = vec![
        ball("apple", "apple", 0.3, -0.2, 0.035),
        ball("mug", "mug", -0.3, -0.25, 0.04),
        ball("ball", "ball", 0.05, 0.3, 0.05),
        ball("clock", "clock", -0.35, 0.25, 0.045),
        ball("plant", "plant", 0.35, 0.3, 0.05),
        ball("lamp", "lamp", 0.0, -0.35, 0.04),
    ];
    let target = |id: &str, x: f64, z: f64| TargetSpec {
        center: Vec3::new(x, 0.0, z),
        radius: 0.07,
        required_object: id.into(),
        silhouette_label: id.into(),
    };
    Scene {
        objects,
        targets: vec![target("apple", -0.05, 0.05), target("mug", 0.2, 0.05), target("ball", -0.2, 0.0)],
        ..Scene::default()
    }
}

/// Carries each required object as soon as its silhouette is up. Target
/// appearance depends on when the previous one settled, so the carry
/// start times leave a margin over the earliest possible appearance.
pub fn study_two_trace() -> Vec<InputEvent> {
    let scene = study_two_scene();
    let timeline = Timeline::study_two();
    let mut b = TraceBuilder::new();
    b.move_volume(0.0, PARKED);
    let mut earliest = timeline.delay(0);
    for (k, target) in scene.targets.iter().enumerate() {
        let obj = scene.object(&target.required_object).expect("target object in scene");
        let from = obj.position();
        let to = target.center + Vec3::new(0.0, from.y, 0.0);
        let start = earliest + 0.5;
        let open = b.carry(start, from, to, 0.02);
        // drop of 2 cm plus half a second of rest, then the next delay
        earliest = open + 1.0 + timeline.delay(k + 1);
    }
    b.build()
}

pub fn study_two_script(fov: FovCondition) -> TaskScript {
    TaskScript { fov, ..TaskScript::new(study_two_scene(), study_two_trace(), Timeline::study_two()) }
}

/// Recalled positions with a fixed per-object offset, as a participant
/// placing objects from memory after the run.
pub fn recalled_positions(actual: &BTreeMap<String, Vec3>, error: f64) -> BTreeMap<String, Vec3> {
    actual
        .iter()
        .enumerate()
        .map(|(i, (id, p))| {
            let angle = i as f64 * 1.1;
            let offset = Vec3::new(libm::cos(angle), 0.0, libm::sin(angle)) * error;
            (id.clone(), *p + offset)
        })
        .collect()
}
