//! Grasp-by-pressure: candidate selection, the threshold state machine,
//! rigid attachment of the grasped object, and bimanual detection.
//!
//! An object is a candidate when its center lies inside the cube; among
//! several, the one closest to the cube center wins (ties go to the
//! lexicographically smallest id). Squeezing any face past `theta_on`
//! grasps the candidate and freezes its pose in the cube's local frame;
//! the grasp holds until the strongest face drops below `theta_off`.

use alloc::string::String;
use core::fmt;

use crate::projection::FACE_COUNT;
use crate::scene::{Scene, TangibleVolume};
use crate::spatial::{compose, invert, Pose};

pub const DEFAULT_THETA_ON: f64 = 0.5;
pub const DEFAULT_THETA_OFF: f64 = 0.4;

/// Normalized per-face pressures, indexed `+X, -X, +Y, -Y, +Z, -Z`.
pub type Pressures = [f64; FACE_COUNT];

/// Opposite face pairs under the face-index convention.
pub const OPPOSITE_FACES: [(usize, usize); 3] = [(0, 1), (2, 3), (4, 5)];

#[derive(Debug, Clone, PartialEq)]
pub enum InteractionError {
    InvalidThresholds { theta_on: f64, theta_off: f64 },
    PressureOutOfRange { face: usize, value: f64 },
    GraspedObjectMissing(String),
    NotGrasped,
}

impl fmt::Display for InteractionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InteractionError::InvalidThresholds { theta_on, theta_off } => {
                write!(f, "thresholds must satisfy 0 < theta_off < theta_on <= 1 (got on={theta_on}, off={theta_off})")
            }
            InteractionError::PressureOutOfRange { face, value } => {
                write!(f, "face {face} pressure {value} outside [0, 1]")
            }
            InteractionError::GraspedObjectMissing(id) => {
                write!(f, "grasped object `{id}` is no longer in the scene")
            }
            InteractionError::NotGrasped => f.write_str("no object is grasped"),
        }
    }
}

impl core::error::Error for InteractionError {}

/// Grasp and release thresholds on the aggregate (max) face pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    theta_on: f64,
    theta_off: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { theta_on: DEFAULT_THETA_ON, theta_off: DEFAULT_THETA_OFF }
    }
}

impl Thresholds {
    pub fn new(theta_on: f64, theta_off: f64) -> Result<Thresholds, InteractionError> {
        if theta_on > 0.0 && theta_on <= 1.0 && theta_off > 0.0 && theta_off < theta_on {
            Ok(Thresholds { theta_on, theta_off })
        } else {
            Err(InteractionError::InvalidThresholds { theta_on, theta_off })
        }
    }

    /// `theta_off = 0.8 * theta_on`.
    pub fn with_on(theta_on: f64) -> Result<Thresholds, InteractionError> {
        Thresholds::new(theta_on, 0.8 * theta_on)
    }

    pub fn theta_on(&self) -> f64 {
        self.theta_on
    }

    pub fn theta_off(&self) -> f64 {
        self.theta_off
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum GraspPhase {
    #[default]
    NoCandidate,
    Candidate(String),
    Grasped(String),
}

impl GraspPhase {
    pub fn grasped_id(&self) -> Option<&str> {
        match self {
            GraspPhase::Grasped(id) => Some(id),
            _ => None,
        }
    }

    pub fn is_grasped(&self) -> bool {
        matches!(self, GraspPhase::Grasped(_))
    }

    fn from_candidate(c: Option<&str>) -> GraspPhase {
        match c {
            Some(id) => GraspPhase::Candidate(id.into()),
            None => GraspPhase::NoCandidate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspState {
    pub phase: GraspPhase,
    /// Object pose in the volume frame, captured at grasp onset. Identity
    /// outside of `Grasped`.
    pub relative: Pose,
    pub bimanual: bool,
    pub thresholds: Thresholds,
}

impl Default for GraspState {
    fn default() -> Self {
        GraspState::new(Thresholds::default())
    }
}

impl GraspState {
    pub fn new(thresholds: Thresholds) -> GraspState {
        GraspState { phase: GraspPhase::NoCandidate, relative: Pose::IDENTITY, bimanual: false, thresholds }
    }
}

/// A phase change worth telling the outside world about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraspEvent {
    Grasp(String),
    Release(String),
}

impl GraspEvent {
    pub fn between(before: &GraspPhase, after: &GraspPhase) -> Option<GraspEvent> {
        match (before.grasped_id(), after.grasped_id()) {
            (None, Some(id)) => Some(GraspEvent::Grasp(id.into())),
            (Some(id), None) => Some(GraspEvent::Release(id.into())),
            _ => None,
        }
    }
}

/// The object inside the volume closest to its center.
pub fn candidate<'s>(scene: &'s Scene, volume: &TangibleVolume) -> Option<&'s str> {
    let mut best: Option<(f64, &str)> = None;
    for obj in &scene.objects {
        let local = volume.local_point(obj.position());
        if local.max_abs() > volume.half_extent {
            continue;
        }
        let d = local.length_squared();
        let better = match best {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && obj.id.as_str() < bid),
        };
        if better {
            best = Some((d, &obj.id));
        }
    }
    best.map(|(_, id)| id)
}

fn validate_pressures(pressures: &Pressures) -> Result<f64, InteractionError> {
    let mut max = 0.0f64;
    for (face, &value) in pressures.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(InteractionError::PressureOutOfRange { face, value });
        }
        max = max.max(value);
    }
    Ok(max)
}

/// Advances the grasp state machine by one pressure sample.
pub fn step_grasp(
    state: &GraspState,
    pressures: &Pressures,
    scene: &Scene,
    volume: &TangibleVolume,
) -> Result<GraspState, InteractionError> {
    let p = validate_pressures(pressures)?;
    let th = state.thresholds;
    let mut next = state.clone();

    if let GraspPhase::Grasped(_) = state.phase {
        if p < th.theta_off {
            next.phase = GraspPhase::from_candidate(candidate(scene, volume));
            next.relative = Pose::IDENTITY;
            next.bimanual = false;
        } else {
            next.bimanual =
                OPPOSITE_FACES.iter().any(|&(a, b)| pressures[a] >= th.theta_on && pressures[b] >= th.theta_on);
        }
        return Ok(next);
    }

    let current = candidate(scene, volume);
    match current {
        Some(id) if p >= th.theta_on => {
            let obj = scene.object(id).ok_or_else(|| InteractionError::GraspedObjectMissing(id.into()))?;
            next.relative = compose(&invert(&volume.pose), &obj.pose);
            next.phase = GraspPhase::Grasped(id.into());
            next.bimanual =
                OPPOSITE_FACES.iter().any(|&(a, b)| pressures[a] >= th.theta_on && pressures[b] >= th.theta_on);
        }
        _ => {
            next.phase = GraspPhase::from_candidate(current);
            next.relative = Pose::IDENTITY;
            next.bimanual = false;
        }
    }
    Ok(next)
}

/// Moves the grasped object so it follows the volume rigidly.
pub fn apply_grasp(state: &GraspState, volume: &TangibleVolume, scene: &mut Scene) -> Result<(), InteractionError> {
    let GraspPhase::Grasped(id) = &state.phase else {
        return Err(InteractionError::NotGrasped);
    };
    let obj = scene.object_mut(id).ok_or_else(|| InteractionError::GraspedObjectMissing(id.clone()))?;
    obj.pose = compose(&volume.pose, &state.relative);
    Ok(())
}
