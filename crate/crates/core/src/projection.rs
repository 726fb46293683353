//! Head-coupled off-axis cameras for the six faces of the tangible volume.
//!
//! Each visible face is treated as a window: the frustum runs from the eye
//! through the four corners of the face's visible screen area, so the
//! scene behind the face lines up with the world regardless of where the
//! head is. Matrices follow the OpenGL conventions (right-handed view
//! space looking down `-Z`, clip depth in `[-1, 1]`).

use alloc::vec::Vec;
use core::fmt;

use crate::scene::TangibleVolume;
use crate::spatial::{mat4_mul, mat4_transform, Mat4, Vec3};

pub const DEFAULT_NEAR: f64 = 0.01;
pub const DEFAULT_FAR: f64 = 100.0;

/// Number of faces on the volume. Index order is `+X, -X, +Y, -Y, +Z, -Z`.
pub const FACE_COUNT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionError {
    /// Zero-length or non-orthogonal screen edges.
    DegenerateQuad,
    /// The eye is on or behind the screen plane.
    EyeBehindScreen { distance: f64 },
    /// `near`/`far` not satisfying `0 < near < far`.
    InvalidClipPlanes { near: f64, far: f64 },
}

impl fmt::Display for ProjectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionError::DegenerateQuad => f.write_str("degenerate screen quad"),
            ProjectionError::EyeBehindScreen { distance } => {
                write!(f, "eye is not in front of the screen (signed distance {distance})")
            }
            ProjectionError::InvalidClipPlanes { near, far } => {
                write!(f, "invalid clip planes near={near} far={far}")
            }
        }
    }
}

impl core::error::Error for ProjectionError {}

/// One rectangular screen in world space: lower-left, lower-right and
/// upper-left corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenQuad {
    pub pa: Vec3,
    pub pb: Vec3,
    pub pc: Vec3,
}

impl ScreenQuad {
    pub fn new(pa: Vec3, pb: Vec3, pc: Vec3) -> Result<ScreenQuad, ProjectionError> {
        let quad = ScreenQuad { pa, pb, pc };
        face_basis(&quad)?;
        Ok(quad)
    }

    /// Upper-right corner.
    pub fn pd(&self) -> Vec3 {
        self.pb + self.pc - self.pa
    }

    pub fn corners(&self) -> [Vec3; 4] {
        [self.pa, self.pb, self.pc, self.pd()]
    }

    pub fn center(&self) -> Vec3 {
        (self.pb + self.pc) * 0.5
    }
}

/// Orthonormal screen frame: right, up, and normal toward the viewer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenBasis {
    pub right: Vec3,
    pub up: Vec3,
    pub normal: Vec3,
}

pub fn face_basis(quad: &ScreenQuad) -> Result<ScreenBasis, ProjectionError> {
    let e_right = quad.pb - quad.pa;
    let e_up = quad.pc - quad.pa;
    let (lr, lu) = (e_right.length(), e_up.length());
    if !(lr > 0.0 && lu > 0.0 && lr.is_finite() && lu.is_finite()) {
        return Err(ProjectionError::DegenerateQuad);
    }
    if e_right.dot(e_up).abs() > 1e-9 * lr * lu {
        return Err(ProjectionError::DegenerateQuad);
    }
    let right = e_right / lr;
    let up = e_up / lu;
    let normal = right.cross(up).normalized().ok_or(ProjectionError::DegenerateQuad)?;
    Ok(ScreenBasis { right, up, normal })
}

/// Near-plane extents of an asymmetric frustum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frustum {
    pub left: f64,
    pub right: f64,
    pub bottom: f64,
    pub top: f64,
    pub near: f64,
    pub far: f64,
}

impl Frustum {
    /// `glFrustum`-style perspective matrix.
    pub fn matrix(&self) -> Mat4 {
        let Frustum { left: l, right: r, bottom: b, top: t, near: n, far: f } = *self;
        [
            [2.0 * n / (r - l), 0.0, (r + l) / (r - l), 0.0],
            [0.0, 2.0 * n / (t - b), (t + b) / (t - b), 0.0],
            [0.0, 0.0, -(f + n) / (f - n), -2.0 * f * n / (f - n)],
            [0.0, 0.0, -1.0, 0.0],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceCamera {
    pub face_index: usize,
    pub eye: Vec3,
    pub quad: ScreenQuad,
    pub frustum: Frustum,
    pub view: Mat4,
    pub projection: Mat4,
}

impl FaceCamera {
    pub fn view_projection(&self) -> Mat4 {
        mat4_mul(&self.projection, &self.view)
    }

    /// Normalized device coordinates of a world point, or `None` when the
    /// point sits on the eye plane.
    pub fn project(&self, world: Vec3) -> Option<Vec3> {
        let clip = mat4_transform(&self.view_projection(), world);
        if clip[3].abs() < f64::MIN_POSITIVE {
            return None;
        }
        Some(Vec3::new(clip[0] / clip[3], clip[1] / clip[3], clip[2] / clip[3]))
    }
}

/// Generalized perspective projection for an eye looking through `quad`.
pub fn off_axis_camera(eye: Vec3, quad: &ScreenQuad, near: f64, far: f64) -> Result<FaceCamera, ProjectionError> {
    if !(near > 0.0 && far > near && far.is_finite()) {
        return Err(ProjectionError::InvalidClipPlanes { near, far });
    }
    let basis = face_basis(quad)?;
    let va = quad.pa - eye;
    let vb = quad.pb - eye;
    let vc = quad.pc - eye;
    let distance = -basis.normal.dot(va);
    if distance.is_nan() || distance <= 0.0 {
        return Err(ProjectionError::EyeBehindScreen { distance });
    }
    let scale = near / distance;
    let frustum = Frustum {
        left: basis.right.dot(va) * scale,
        right: basis.right.dot(vb) * scale,
        bottom: basis.up.dot(va) * scale,
        top: basis.up.dot(vc) * scale,
        near,
        far,
    };
    let ScreenBasis { right: r, up: u, normal: n } = basis;
    let view = [
        [r.x, r.y, r.z, -r.dot(eye)],
        [u.x, u.y, u.z, -u.dot(eye)],
        [n.x, n.y, n.z, -n.dot(eye)],
        [0.0, 0.0, 0.0, 1.0],
    ];
    Ok(FaceCamera { face_index: 0, eye, quad: *quad, frustum, view, projection: frustum.matrix() })
}

/// Outward normal, screen-right and screen-up of each face in the volume's
/// local frame. `right × up = outward` for every face.
pub const FACE_FRAMES: [(Vec3, Vec3, Vec3); FACE_COUNT] = [
    (Vec3::X, Vec3::new(0.0, 0.0, -1.0), Vec3::Y),
    (Vec3::new(-1.0, 0.0, 0.0), Vec3::Z, Vec3::Y),
    (Vec3::Y, Vec3::X, Vec3::new(0.0, 0.0, -1.0)),
    (Vec3::new(0.0, -1.0, 0.0), Vec3::X, Vec3::Z),
    (Vec3::Z, Vec3::X, Vec3::Y),
    (Vec3::new(0.0, 0.0, -1.0), Vec3::new(-1.0, 0.0, 0.0), Vec3::Y),
];

/// World-space visible screen area of one face, inset by the bezel.
pub fn face_quad(volume: &TangibleVolume, face: usize) -> ScreenQuad {
    let (normal, right, up) = FACE_FRAMES[face];
    let h = volume.half_extent;
    let s = h * (1.0 - 2.0 * volume.bezel_fraction);
    let c = normal * h;
    let pose = &volume.pose;
    ScreenQuad {
        pa: pose.transform_point(c - right * s - up * s),
        pb: pose.transform_point(c + right * s - up * s),
        pc: pose.transform_point(c - right * s + up * s),
    }
}

/// World-space outward normal of a face.
pub fn face_normal(volume: &TangibleVolume, face: usize) -> Vec3 {
    volume.pose.transform_vector(FACE_FRAMES[face].0)
}

/// Whether the head sees the front of a face.
pub fn face_visible(volume: &TangibleVolume, face: usize, head: Vec3) -> bool {
    let center = volume.pose.transform_point(FACE_FRAMES[face].0 * volume.half_extent);
    face_normal(volume, face).dot(head - center) > 0.0
}

/// One camera per face whose front the head can see, in face-index order.
/// Empty when the head is inside the volume.
pub fn volume_cameras(volume: &TangibleVolume, head: Vec3, near: f64, far: f64) -> Vec<FaceCamera> {
    (0..FACE_COUNT)
        .filter(|&face| face_visible(volume, face, head))
        .filter_map(|face| {
            let quad = face_quad(volume, face);
            off_axis_camera(head, &quad, near, far).ok().map(|mut cam| {
                cam.face_index = face;
                cam
            })
        })
        .collect()
}
