//! File formats, record/replay, the viewer service and the command-line
//! front end for the tangible volume simulator.

pub mod demo;
pub mod doc;
pub mod input;
pub mod live;
pub mod protocol;
pub mod record;
pub mod runner;
pub mod script;
pub mod server;

pub use doc::{load_scene, parse_scene, save_scene, scene_to_string, ConfigDoc, DocError, SceneDoc};
pub use input::{InputMsg, TraceRecord};
pub use record::{replay, Recorder, Recording, ReplayOutcome};
pub use runner::{RunError, Runner, Step};
pub use script::{load_script, ScriptDoc};
pub use server::Server;
