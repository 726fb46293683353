//! The session loop shared by live runs, the viewer server and replays:
//! inputs are stamped with simulated time, optionally recorded, then
//! folded by the session at their tick.

use std::io;

use tangible_core::scene::Scene;
use tangible_core::session::{
    InputError, InputEvent, Session, SessionConfig, SessionError, SessionEvent, StateSnapshot,
};

use crate::doc::DocError;
use crate::input::InputMsg;
use crate::record::Recorder;

/// Inputs this close to the current tick time count as already past.
const LATE_EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Doc(#[from] DocError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("input rejected: {0}")]
    Input(#[from] InputError),
    #[error("input at t={t} s arrived after tick time {now} s")]
    Late { t: f64, now: f64 },
    #[error("recording failed: {0}")]
    Io(#[from] io::Error),
}

pub struct Step {
    pub snapshot: StateSnapshot,
    pub events: Vec<SessionEvent>,
}

pub struct Runner {
    session: Session,
    recorder: Option<Recorder>,
}

impl Runner {
    pub fn new(scene: Scene, config: SessionConfig) -> Result<Runner, RunError> {
        Ok(Runner { session: Session::new(scene, config)?, recorder: None })
    }

    pub fn with_recorder(mut self, recorder: Recorder) -> Runner {
        self.recorder = Some(recorder);
        self
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn tick_count(&self) -> u64 {
        self.session.tick_count()
    }

    /// Simulated time of the tick that the next `step` produces.
    pub fn next_tick_time(&self) -> f64 {
        (self.session.tick_count() + 1) as f64 * self.session.config().dt
    }

    /// Applies a live input at the next tick and returns its timestamp.
    pub fn submit(&mut self, msg: InputMsg) -> Result<f64, RunError> {
        let t = self.next_tick_time();
        self.submit_at(t, msg)?;
        Ok(t)
    }

    /// Queues an input for simulated time `t`. Times at or before the
    /// current tick are refused, since a replay would fold them earlier.
    pub fn submit_at(&mut self, t: f64, msg: InputMsg) -> Result<(), RunError> {
        let now = self.session.time();
        if self.session.tick_count() > 0 && t <= now + LATE_EPS {
            return Err(RunError::Late { t, now });
        }
        let kind = msg.to_kind()?;
        self.session.push_input(InputEvent::new(t, kind))?;
        if let Some(rec) = &mut self.recorder {
            rec.input(t, &msg)?;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<Step, RunError> {
        let snapshot = self.session.tick()?;
        let events = self.session.drain_events();
        Ok(Step { snapshot, events })
    }

    pub fn snapshot(&self) -> StateSnapshot {
        self.session.snapshot()
    }

    /// Closes the recording, if any, and returns the final state hash.
    pub fn finish(self) -> Result<u64, RunError> {
        let snap = self.session.snapshot();
        let hash = snap.state_hash();
        if let Some(rec) = self.recorder {
            rec.finish(snap.tick, hash)?;
        }
        Ok(hash)
    }
}
