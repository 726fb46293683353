//! Viewer protocol: newline-delimited JSON over one TCP stream. Every
//! message carries `v` and `type`. See `docs/protocol.md`.

use serde::{Deserialize, Serialize};
use tangible_core::interaction::GraspPhase;
use tangible_core::projection::FaceCamera;
use tangible_core::session::{SessionEvent, StateSnapshot};
use tangible_core::spatial::Mat4;
use tangible_core::study::{TargetSpec, HINTS};

use crate::doc::{rotation_to_xyzw, FovDoc, VolumeDoc};
use crate::input::InputMsg;
use crate::record::hash_hex;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub v: u32,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Body {
    Input { input: InputMsg },
    Snapshot(Box<SnapshotMsg>),
    Hint { index: usize, text: String },
    Event { tick: u64, event: EventMsg },
    Error { message: String },
}

impl Message {
    pub fn new(body: Body) -> Message {
        Message { v: PROTOCOL_VERSION, body }
    }

    /// One protocol line, newline included.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("protocol messages always serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMsg {
    NoCandidate,
    Candidate,
    Grasped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetState {
    Pending,
    Active,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectMsg {
    pub id: String,
    pub label: String,
    pub position: [f64; 3],
    pub rotation: [f64; 4],
    pub radius: f64,
    pub asleep: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetMsg {
    pub index: usize,
    pub object: String,
    pub silhouette: String,
    pub center: [f64; 3],
    pub radius: f64,
    pub state: TargetState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrustumMsg {
    pub left: f64,
    pub right: f64,
    pub bottom: f64,
    pub top: f64,
    pub near: f64,
    pub far: f64,
}

/// Matrices are row-major and act on column vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraMsg {
    pub face: usize,
    pub eye: [f64; 3],
    /// Screen corners `pa, pb, pc, pd` (bottom-left, bottom-right,
    /// top-left, top-right), bezel already removed.
    pub corners: [[f64; 3]; 4],
    pub frustum: FrustumMsg,
    pub view: Mat4,
    pub projection: Mat4,
}

impl CameraMsg {
    pub fn from_camera(c: &FaceCamera) -> CameraMsg {
        let f = c.frustum;
        CameraMsg {
            face: c.face_index,
            eye: c.eye.to_array(),
            corners: c.quad.corners().map(|p| p.to_array()),
            frustum: FrustumMsg {
                left: f.left,
                right: f.right,
                bottom: f.bottom,
                top: f.top,
                near: f.near,
                far: f.far,
            },
            view: c.view,
            projection: c.projection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMsg {
    pub tick: u64,
    pub time: f64,
    /// State hash as 16 hex digits.
    pub hash: String,
    pub volume: VolumeDoc,
    pub head: [f64; 3],
    pub objects: Vec<ObjectMsg>,
    pub phase: PhaseMsg,
    pub candidate: Option<String>,
    pub grasped: Option<String>,
    /// Object to draw outlined: the candidate or the held object.
    pub outline_id: Option<String>,
    pub bimanual: bool,
    pub pressures: [f64; 6],
    pub targets: Vec<TargetMsg>,
    pub completed_targets: usize,
    pub hints: Vec<String>,
    pub finished: bool,
    pub fov: FovDoc,
    pub cameras: Vec<CameraMsg>,
}

impl SnapshotMsg {
    /// `targets` are the scene's targets, which complete in order.
    pub fn new(s: &StateSnapshot, targets: &[TargetSpec]) -> SnapshotMsg {
        let (phase, candidate, grasped) = match &s.phase {
            GraspPhase::NoCandidate => (PhaseMsg::NoCandidate, None, None),
            GraspPhase::Candidate(id) => (PhaseMsg::Candidate, Some(id.clone()), None),
            GraspPhase::Grasped(id) => (PhaseMsg::Grasped, None, Some(id.clone())),
        };
        SnapshotMsg {
            tick: s.tick,
            time: s.time,
            hash: hash_hex(s.state_hash()),
            volume: VolumeDoc::from_volume(&s.volume),
            head: s.head.to_array(),
            objects: s
                .objects
                .iter()
                .map(|o| ObjectMsg {
                    id: o.id.clone(),
                    label: o.label.clone(),
                    position: o.pose.translation.to_array(),
                    rotation: rotation_to_xyzw(o.pose.rotation),
                    radius: o.radius,
                    asleep: o.asleep,
                })
                .collect(),
            phase,
            candidate,
            grasped,
            outline_id: s.outline_id().map(String::from),
            bimanual: s.bimanual,
            pressures: s.pressures,
            targets: targets
                .iter()
                .enumerate()
                .map(|(index, t)| TargetMsg {
                    index,
                    object: t.required_object.clone(),
                    silhouette: t.silhouette_label.clone(),
                    center: t.center.to_array(),
                    radius: t.radius,
                    state: if index < s.completed_targets {
                        TargetState::Complete
                    } else if s.active_target == Some(index) {
                        TargetState::Active
                    } else {
                        TargetState::Pending
                    },
                })
                .collect(),
            completed_targets: s.completed_targets,
            hints: HINTS[..s.hints_revealed].iter().map(|h| h.to_string()).collect(),
            finished: s.finished,
            fov: s.fov.into(),
            cameras: s.cameras.iter().map(CameraMsg::from_camera).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventMsg {
    Grasp { id: String },
    Release { id: String },
    TargetAppeared { index: usize, object: String, silhouette: String },
    TargetComplete { index: usize, object: String, elapsed_s: f64 },
    Finished,
}

/// Protocol messages for one tick's session events. Hint reveals become
/// `hint` messages, everything else an `event`.
pub fn event_messages(tick: u64, events: &[SessionEvent]) -> Vec<Message> {
    events
        .iter()
        .map(|e| {
            let event = match e {
                SessionEvent::HintRevealed { index, text } => {
                    return Message::new(Body::Hint { index: *index, text: text.to_string() });
                }
                SessionEvent::Grasp { id } => EventMsg::Grasp { id: id.clone() },
                SessionEvent::Release { id } => EventMsg::Release { id: id.clone() },
                SessionEvent::TargetAppeared { index, object, silhouette } => {
                    EventMsg::TargetAppeared { index: *index, object: object.clone(), silhouette: silhouette.clone() }
                }
                SessionEvent::TargetComplete { index, object, elapsed } => {
                    EventMsg::TargetComplete { index: *index, object: object.clone(), elapsed_s: *elapsed }
                }
                SessionEvent::Finished => EventMsg::Finished,
            };
            Message::new(Body::Event { tick, event })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClientLine {
    v: u32,
    #[serde(rename = "type")]
    kind: ClientKind,
    input: InputMsg,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ClientKind {
    Input,
}

/// Parses one client line; the error text is sent back to the client.
pub fn parse_client_line(line: &str) -> Result<InputMsg, String> {
    let msg: ClientLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let ClientKind::Input = msg.kind;
    if msg.v != PROTOCOL_VERSION {
        return Err(format!("unsupported protocol version {}", msg.v));
    }
    Ok(msg.input)
}

pub fn input_line(input: InputMsg) -> String {
    Message::new(Body::Input { input }).to_line()
}
