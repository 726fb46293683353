//! Input messages as they appear in recordings, scripts and the viewer
//! protocol.

use serde::{Deserialize, Serialize};
use tangible_core::sensor::PressureFrame;
use tangible_core::session::{InputEvent, InputKind};
use tangible_core::spatial::Pose;

use crate::doc::{rotation_from_xyzw, rotation_to_xyzw, vec3, DocError, FovDoc, IDENTITY_XYZW};

fn identity_xyzw() -> [f64; 4] {
    IDENTITY_XYZW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputMsg {
    SetVolumePose {
        position: [f64; 3],
        #[serde(default = "identity_xyzw")]
        rotation: [f64; 4],
    },
    SetHead {
        position: [f64; 3],
    },
    /// Normalized pressure in `[0, 1]` for one face.
    SetFacePressure {
        face: usize,
        value: f64,
    },
    /// A raw sensor frame, calibrated by the session.
    PressureFrame {
        seq: u32,
        t_ms: u64,
        raw: [u16; 6],
    },
    PressHint,
    SetFov {
        fov: FovDoc,
    },
}

impl InputMsg {
    pub fn to_kind(&self) -> Result<InputKind, DocError> {
        Ok(match self {
            InputMsg::SetVolumePose { position, rotation } => {
                InputKind::VolumePose(Pose::new(vec3(*position), rotation_from_xyzw(*rotation, "rotation")?))
            }
            InputMsg::SetHead { position } => InputKind::Head(vec3(*position)),
            InputMsg::SetFacePressure { face, value } => InputKind::FacePressure { face: *face, value: *value },
            InputMsg::PressureFrame { seq, t_ms, raw } => InputKind::Pressure(PressureFrame::new(*seq, *t_ms, *raw)),
            InputMsg::PressHint => InputKind::HintPress,
            InputMsg::SetFov { fov } => InputKind::SetFov((*fov).into()),
        })
    }

    pub fn from_kind(kind: &InputKind) -> InputMsg {
        match kind {
            InputKind::VolumePose(p) => {
                InputMsg::SetVolumePose { position: p.translation.to_array(), rotation: rotation_to_xyzw(p.rotation) }
            }
            InputKind::Head(h) => InputMsg::SetHead { position: h.to_array() },
            InputKind::FacePressure { face, value } => InputMsg::SetFacePressure { face: *face, value: *value },
            InputKind::Pressure(f) => InputMsg::PressureFrame { seq: f.seq, t_ms: f.t_ms, raw: f.raw },
            InputKind::HintPress => InputMsg::PressHint,
            InputKind::SetFov(f) => InputMsg::SetFov { fov: (*f).into() },
        }
    }
}

/// One timestamped input, as stored in traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub t: f64,
    pub input: InputMsg,
}

impl TraceRecord {
    pub fn to_event(&self) -> Result<InputEvent, DocError> {
        Ok(InputEvent::new(self.t, self.input.to_kind()?))
    }

    pub fn from_event(e: &InputEvent) -> TraceRecord {
        TraceRecord { t: e.time, input: InputMsg::from_kind(&e.kind) }
    }
}
