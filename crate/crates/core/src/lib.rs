//! Simulation core for a handheld "tangible volume": a cube whose faces act
//! as head-coupled windows onto a world-anchored virtual scene, and which
//! grasps the object inside it when squeezed.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, networking
//! and the command line live in the `tangible-sim` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod fixtures;
pub mod hash;
pub mod interaction;
pub mod physics;
pub mod projection;
pub mod scene;
pub mod sensor;
pub mod session;
pub mod spatial;
pub mod study;

pub use interaction::{candidate, step_grasp, GraspPhase, GraspState, Thresholds};
pub use physics::{step_physics, Bodies, PhysicsConfig};
pub use projection::{off_axis_camera, volume_cameras, FaceCamera, ScreenQuad};
pub use scene::{Scene, TangibleVolume, VirtualObject};
pub use sensor::{encode_frame, parse_frame, Calibration, FrameDecoder, PressureFrame};
pub use session::{InputEvent, InputKind, Session, SessionConfig, SessionEvent, StateSnapshot};
pub use spatial::{compose, invert, Orientation, Pose, Vec3};
pub use study::{run_scenario, FovCondition, RunMetrics, TargetSpec, TaskScript, Timeline};
