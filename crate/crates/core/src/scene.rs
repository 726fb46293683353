//! World-anchored scene, the tangible volume, and their validation rules.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::spatial::{invert, Pose, Vec3};
use crate::study::TargetSpec;

pub const DEFAULT_GRAVITY: f64 = 9.81;
pub const DEFAULT_HALF_EXTENT: f64 = 0.05;
pub const DEFAULT_BEZEL_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum SceneError {
    DuplicateId(String),
    NonPositiveRadius { id: String, radius: f64 },
    NonFinitePose { id: String },
    NegativeGravity(f64),
    InvalidHalfExtent(f64),
    InvalidBezel(f64),
    InvalidTarget { index: usize, reason: &'static str },
    UnknownTargetObject { index: usize, id: String },
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneError::DuplicateId(id) => write!(f, "duplicate object id `{id}`"),
            SceneError::NonPositiveRadius { id, radius } => {
                write!(f, "object `{id}`: radius must be > 0 (got {radius})")
            }
            SceneError::NonFinitePose { id } => write!(f, "object `{id}`: pose is not finite"),
            SceneError::NegativeGravity(g) => write!(f, "gravity must be >= 0 (got {g})"),
            SceneError::InvalidHalfExtent(h) => write!(f, "volume half extent must be > 0 (got {h})"),
            SceneError::InvalidBezel(b) => write!(f, "bezel fraction must be in [0, 0.4) (got {b})"),
            SceneError::InvalidTarget { index, reason } => write!(f, "targets[{index}]: {reason}"),
            SceneError::UnknownTargetObject { index, id } => {
                write!(f, "targets[{index}]: required object `{id}` is not in the scene")
            }
        }
    }
}

impl core::error::Error for SceneError {}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualObject {
    pub id: String,
    pub label: String,
    pub pose: Pose,
    /// Bounding sphere radius, used for selection, collision and targets.
    pub radius: f64,
    /// Whether the object takes part in physics once released.
    pub dynamic: bool,
}

impl VirtualObject {
    pub fn new(id: impl Into<String>, label: impl Into<String>, pose: Pose, radius: f64, dynamic: bool) -> Self {
        VirtualObject { id: id.into(), label: label.into(), pose, radius, dynamic }
    }

    pub fn position(&self) -> Vec3 {
        self.pose.translation
    }
}

/// The handheld cube: a movable window onto a cubic region of the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangibleVolume {
    pub pose: Pose,
    pub half_extent: f64,
    /// Bezel width per face edge, as a fraction of the face width.
    pub bezel_fraction: f64,
}

impl Default for TangibleVolume {
    fn default() -> Self {
        TangibleVolume {
            pose: Pose::IDENTITY,
            half_extent: DEFAULT_HALF_EXTENT,
            bezel_fraction: DEFAULT_BEZEL_FRACTION,
        }
    }
}

impl TangibleVolume {
    pub fn new(pose: Pose, half_extent: f64, bezel_fraction: f64) -> Result<Self, SceneError> {
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(SceneError::InvalidHalfExtent(half_extent));
        }
        if !(0.0..0.4).contains(&bezel_fraction) {
            return Err(SceneError::InvalidBezel(bezel_fraction));
        }
        Ok(TangibleVolume { pose, half_extent, bezel_fraction })
    }

    pub fn center(&self) -> Vec3 {
        self.pose.translation
    }

    pub fn local_point(&self, world: Vec3) -> Vec3 {
        local_point(self, world)
    }

    pub fn contains(&self, world: Vec3) -> bool {
        self.local_point(world).max_abs() <= self.half_extent
    }
}

/// Coordinates of a world point in the volume's local frame.
pub fn local_point(volume: &TangibleVolume, world: Vec3) -> Vec3 {
    invert(&volume.pose).transform_point(world)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub objects: Vec<VirtualObject>,
    pub gravity_enabled: bool,
    pub gravity: f64,
    pub ground_y: f64,
    pub targets: Vec<TargetSpec>,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            objects: Vec::new(),
            gravity_enabled: true,
            gravity: DEFAULT_GRAVITY,
            ground_y: 0.0,
            targets: Vec::new(),
        }
    }
}

impl Scene {
    /// Builds a scene and checks every invariant.
    pub fn new(
        objects: Vec<VirtualObject>,
        gravity_enabled: bool,
        gravity: f64,
        ground_y: f64,
        targets: Vec<TargetSpec>,
    ) -> Result<Scene, SceneError> {
        let scene = Scene { objects, gravity_enabled, gravity, ground_y, targets };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(SceneError::NegativeGravity(self.gravity));
        }
        let mut ids: Vec<&str> = Vec::with_capacity(self.objects.len());
        for obj in &self.objects {
            if ids.contains(&obj.id.as_str()) {
                return Err(SceneError::DuplicateId(obj.id.clone()));
            }
            ids.push(&obj.id);
            if !(obj.radius > 0.0 && obj.radius.is_finite()) {
                return Err(SceneError::NonPositiveRadius { id: obj.id.clone(), radius: obj.radius });
            }
            if !obj.pose.is_finite() {
                return Err(SceneError::NonFinitePose { id: obj.id.clone() });
            }
        }
        for (index, t) in self.targets.iter().enumerate() {
            if !(t.radius > 0.0 && t.radius.is_finite()) {
                return Err(SceneError::InvalidTarget { index, reason: "radius must be > 0" });
            }
            if !t.center.is_finite() {
                return Err(SceneError::InvalidTarget { index, reason: "center is not finite" });
            }
            if (t.center.y - self.ground_y).abs() > 1e-9 {
                return Err(SceneError::InvalidTarget { index, reason: "center must lie on the ground plane" });
            }
            if !ids.contains(&t.required_object.as_str()) {
                return Err(SceneError::UnknownTargetObject { index, id: t.required_object.clone() });
            }
        }
        Ok(())
    }

    pub fn object(&self, id: &str) -> Option<&VirtualObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_mut(&mut self, id: &str) -> Option<&mut VirtualObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.object(id).is_some()
    }
}
