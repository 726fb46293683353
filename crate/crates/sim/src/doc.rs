//! JSON documents: scenes, session configuration, and the small value
//! types they share. Rotations are written `[x, y, z, w]`; lengths are
//! meters, times seconds.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tangible_core::interaction::Thresholds;
use tangible_core::physics::DEFAULT_DT;
use tangible_core::projection::{DEFAULT_FAR, DEFAULT_NEAR};
use tangible_core::scene::{
    Scene, TangibleVolume, VirtualObject, DEFAULT_BEZEL_FRACTION, DEFAULT_GRAVITY, DEFAULT_HALF_EXTENT,
};
use tangible_core::sensor::{Calibration, RAW_MAX};
use tangible_core::session::{SessionConfig, DEFAULT_HEAD};
use tangible_core::spatial::{Orientation, Pose, Vec3};
use tangible_core::study::{FovCondition, TargetSpec, Timeline};

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("{0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DocError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> DocError {
        DocError::Invalid { path: path.into(), message: message.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> DocError {
        DocError::Io { path: path.display().to_string(), source }
    }
}

pub const IDENTITY_XYZW: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

fn identity_xyzw() -> [f64; 4] {
    IDENTITY_XYZW
}

fn yes() -> bool {
    true
}

pub fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::from_array(a)
}

pub fn rotation_to_xyzw(r: Orientation) -> [f64; 4] {
    [r.x, r.y, r.z, r.w]
}

/// Parses `[x, y, z, w]`; `path` names the field in errors. Components
/// already unit to within rounding are kept as written so saved documents
/// reload bit for bit, anything else is renormalized.
pub fn rotation_from_xyzw(q: [f64; 4], path: &str) -> Result<Orientation, DocError> {
    let raw = Orientation { w: q[3], x: q[0], y: q[1], z: q[2] };
    let unit = raw
        .normalized()
        .ok_or_else(|| DocError::invalid(path, "rotation must be a finite, non-zero quaternion [x, y, z, w]"))?;
    Ok(if (raw.norm() - 1.0).abs() <= 1e-12 { raw } else { unit })
}

fn finite3(a: [f64; 3], path: &str) -> Result<Vec3, DocError> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(vec3(a))
    } else {
        Err(DocError::invalid(path, "must be finite"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub position: [f64; 3],
    #[serde(default = "identity_xyzw")]
    pub rotation: [f64; 4],
    pub radius: f64,
    #[serde(default = "yes")]
    pub dynamic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDoc {
    pub center: [f64; 3],
    pub radius: f64,
    pub required_object: String,
    pub silhouette_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDoc {
    #[serde(default)]
    pub objects: Vec<ObjectDoc>,
    #[serde(default = "yes")]
    pub gravity_enabled: bool,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default)]
    pub ground_y: f64,
    #[serde(default)]
    pub targets: Vec<TargetDoc>,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

impl SceneDoc {
    /// Validates field by field and builds the scene.
    pub fn to_scene(&self) -> Result<Scene, DocError> {
        let mut objects: Vec<VirtualObject> = Vec::with_capacity(self.objects.len());
        for (i, o) in self.objects.iter().enumerate() {
            let at = |field: &str| format!("objects[{i}].{field}");
            if o.id.is_empty() {
                return Err(DocError::invalid(at("id"), "must not be empty"));
            }
            if objects.iter().any(|p| p.id == o.id) {
                return Err(DocError::invalid(at("id"), format!("duplicate object id `{}`", o.id)));
            }
            if !(o.radius > 0.0 && o.radius.is_finite()) {
                return Err(DocError::invalid(at("radius"), format!("must be > 0 (got {})", o.radius)));
            }
            let position = finite3(o.position, &at("position"))?;
            let rotation = rotation_from_xyzw(o.rotation, &at("rotation"))?;
            let label = o.label.clone().unwrap_or_else(|| o.id.clone());
            objects.push(VirtualObject::new(o.id.clone(), label, Pose::new(position, rotation), o.radius, o.dynamic));
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(DocError::invalid("gravity", format!("must be >= 0 (got {})", self.gravity)));
        }
        if !self.ground_y.is_finite() {
            return Err(DocError::invalid("ground_y", "must be finite"));
        }
        let mut targets = Vec::with_capacity(self.targets.len());
        for (i, t) in self.targets.iter().enumerate() {
            let at = |field: &str| format!("targets[{i}].{field}");
            let center = finite3(t.center, &at("center"))?;
            if !(t.radius > 0.0 && t.radius.is_finite()) {
                return Err(DocError::invalid(at("radius"), format!("must be > 0 (got {})", t.radius)));
            }
            if (center.y - self.ground_y).abs() > 1e-9 {
                return Err(DocError::invalid(at("center"), "must lie on the ground plane (y = ground_y)"));
            }
            if !objects.iter().any(|o| o.id == t.required_object) {
                return Err(DocError::invalid(
                    at("required_object"),
                    format!("no object with id `{}`", t.required_object),
                ));
            }
            targets.push(TargetSpec {
                center,
                radius: t.radius,
                required_object: t.required_object.clone(),
                silhouette_label: t.silhouette_label.clone(),
            });
        }
        let scene = Scene {
            objects,
            gravity_enabled: self.gravity_enabled,
            gravity: self.gravity,
            ground_y: self.ground_y,
            targets,
        };
        scene.validate().map_err(|e| DocError::invalid("scene", e.to_string()))?;
        Ok(scene)
    }

    pub fn from_scene(scene: &Scene) -> SceneDoc {
        SceneDoc {
            objects: scene
                .objects
                .iter()
                .map(|o| ObjectDoc {
                    id: o.id.clone(),
                    label: Some(o.label.clone()),
                    position: o.pose.translation.to_array(),
                    rotation: rotation_to_xyzw(o.pose.rotation),
                    radius: o.radius,
                    dynamic: o.dynamic,
                })
                .collect(),
            gravity_enabled: scene.gravity_enabled,
            gravity: scene.gravity,
            ground_y: scene.ground_y,
            targets: scene
                .targets
                .iter()
                .map(|t| TargetDoc {
                    center: t.center.to_array(),
                    radius: t.radius,
                    required_object: t.required_object.clone(),
                    silhouette_label: t.silhouette_label.clone(),
                })
                .collect(),
        }
    }
}

pub fn parse_scene(text: &str) -> Result<Scene, DocError> {
    serde_json::from_str::<SceneDoc>(text)?.to_scene()
}

pub fn scene_to_string(scene: &Scene) -> String {
    let mut s = serde_json::to_string_pretty(&SceneDoc::from_scene(scene)).expect("scene documents always serialize");
    s.push('\n');
    s
}

pub fn load_scene(path: &Path) -> Result<Scene, DocError> {
    let text = fs::read_to_string(path).map_err(|e| DocError::io(path, e))?;
    parse_scene(&text).map_err(|e| match e {
        DocError::Invalid { path: field, message } => {
            DocError::Invalid { path: format!("{}: {field}", path.display()), message }
        }
        DocError::Syntax(s) => DocError::Invalid { path: path.display().to_string(), message: s.to_string() },
        other => other,
    })
}

pub fn save_scene(path: &Path, scene: &Scene) -> Result<(), DocError> {
    fs::write(path, scene_to_string(scene)).map_err(|e| DocError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FovDoc {
    #[default]
    Narrow,
    Wide,
}

impl From<FovDoc> for FovCondition {
    fn from(f: FovDoc) -> Self {
        match f {
            FovDoc::Narrow => FovCondition::Narrow,
            FovDoc::Wide => FovCondition::Wide,
        }
    }
}

impl From<FovCondition> for FovDoc {
    fn from(f: FovCondition) -> Self {
        match f {
            FovCondition::Narrow => FovDoc::Narrow,
            FovCondition::Wide => FovDoc::Wide,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeDoc {
    #[serde(default)]
    pub position: [f64; 3],
    #[serde(default = "identity_xyzw")]
    pub rotation: [f64; 4],
    #[serde(default = "default_half_extent")]
    pub half_extent: f64,
    #[serde(default = "default_bezel")]
    pub bezel_fraction: f64,
}

fn default_half_extent() -> f64 {
    DEFAULT_HALF_EXTENT
}

fn default_bezel() -> f64 {
    DEFAULT_BEZEL_FRACTION
}

impl Default for VolumeDoc {
    fn default() -> Self {
        VolumeDoc::from_volume(&TangibleVolume::default())
    }
}

impl VolumeDoc {
    pub fn from_volume(v: &TangibleVolume) -> VolumeDoc {
        VolumeDoc {
            position: v.pose.translation.to_array(),
            rotation: rotation_to_xyzw(v.pose.rotation),
            half_extent: v.half_extent,
            bezel_fraction: v.bezel_fraction,
        }
    }

    pub fn to_volume(&self) -> Result<TangibleVolume, DocError> {
        let pose = Pose::new(
            finite3(self.position, "volume.position")?,
            rotation_from_xyzw(self.rotation, "volume.rotation")?,
        );
        TangibleVolume::new(pose, self.half_extent, self.bezel_fraction)
            .map_err(|e| DocError::invalid("volume", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationDoc {
    pub baseline: [u16; 6],
    pub span: [u16; 6],
}

impl Default for CalibrationDoc {
    fn default() -> Self {
        CalibrationDoc { baseline: [0; 6], span: [RAW_MAX; 6] }
    }
}

impl CalibrationDoc {
    pub fn to_calibration(&self) -> Result<Calibration, DocError> {
        Calibration::new(self.baseline, self.span).map_err(|e| DocError::invalid("calibration", e.to_string()))
    }

    pub fn from_calibration(c: &Calibration) -> CalibrationDoc {
        CalibrationDoc { baseline: c.baseline(), span: c.span() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineDoc {
    #[serde(default)]
    pub delays_s: Vec<f64>,
    #[serde(default)]
    pub final_delay_s: Option<f64>,
}

impl TimelineDoc {
    pub fn to_timeline(&self) -> Result<Timeline, DocError> {
        for (i, d) in self.delays_s.iter().enumerate() {
            if !(*d >= 0.0 && d.is_finite()) {
                return Err(DocError::invalid(format!("timeline.delays_s[{i}]"), "must be a finite delay >= 0"));
            }
        }
        if let Some(d) = self.final_delay_s {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(DocError::invalid("timeline.final_delay_s", "must be a finite delay >= 0"));
            }
        }
        Ok(Timeline { delays: self.delays_s.clone(), final_delay: self.final_delay_s })
    }

    pub fn from_timeline(t: &Timeline) -> TimelineDoc {
        TimelineDoc { delays_s: t.delays.clone(), final_delay_s: t.final_delay }
    }
}

/// Everything besides the scene that determines a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_theta_on")]
    pub theta_on: f64,
    #[serde(default = "default_theta_off")]
    pub theta_off: f64,
    #[serde(default)]
    pub fov: FovDoc,
    #[serde(default = "default_head")]
    pub head: [f64; 3],
    #[serde(default)]
    pub volume: VolumeDoc,
    #[serde(default)]
    pub calibration: CalibrationDoc,
    #[serde(default)]
    pub timeline: TimelineDoc,
    #[serde(default = "default_near")]
    pub near: f64,
    #[serde(default = "default_far")]
    pub far: f64,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_theta_on() -> f64 {
    Thresholds::default().theta_on()
}

fn default_theta_off() -> f64 {
    Thresholds::default().theta_off()
}

fn default_head() -> [f64; 3] {
    DEFAULT_HEAD.to_array()
}

fn default_near() -> f64 {
    DEFAULT_NEAR
}

fn default_far() -> f64 {
    DEFAULT_FAR
}

impl Default for ConfigDoc {
    fn default() -> Self {
        ConfigDoc::from_config(&SessionConfig::default())
    }
}

impl ConfigDoc {
    pub fn from_config(c: &SessionConfig) -> ConfigDoc {
        ConfigDoc {
            dt: c.dt,
            theta_on: c.thresholds.theta_on(),
            theta_off: c.thresholds.theta_off(),
            fov: c.fov.into(),
            head: c.head.to_array(),
            volume: VolumeDoc::from_volume(&c.volume),
            calibration: CalibrationDoc::from_calibration(&c.calibration),
            timeline: TimelineDoc::from_timeline(&c.timeline),
            near: c.near,
            far: c.far,
        }
    }

    /// Builds the session configuration; `headless` is a run-time choice
    /// and is not part of the document.
    pub fn to_config(&self, headless: bool) -> Result<SessionConfig, DocError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DocError::invalid("dt", format!("must be > 0 (got {})", self.dt)));
        }
        let thresholds = Thresholds::new(self.theta_on, self.theta_off)
            .map_err(|e| DocError::invalid("theta_on/theta_off", e.to_string()))?;
        Ok(SessionConfig {
            dt: self.dt,
            thresholds,
            calibration: self.calibration.to_calibration()?,
            volume: self.volume.to_volume()?,
            head: finite3(self.head, "head")?,
            timeline: self.timeline.to_timeline()?,
            fov: self.fov.into(),
            headless,
            near: self.near,
            far: self.far,
            ..SessionConfig::default()
        })
    }
}
