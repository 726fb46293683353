//! The live loop: scheduled inputs and viewer inputs go into the runner,
//! each tick's events and snapshot go out to the viewers.

use std::thread;
use std::time::{Duration, Instant};

use tangible_core::study::TargetSpec;

use crate::input::TraceRecord;
use crate::protocol::{event_messages, Body, Message, SnapshotMsg};
use crate::runner::{RunError, Runner, Step};
use crate::server::Server;

/// Extra slack when matching scheduled inputs to the coming tick, equal
/// to the session's own.
const DUE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiveOptions {
    /// Stop after this many ticks; run until stopped when `None`.
    pub ticks: Option<u64>,
    /// Hold each tick to wall-clock time.
    pub pace: bool,
    /// Stop once the session reports its timeline finished.
    pub stop_when_finished: bool,
    /// Apply viewer inputs; when false they are answered with an error
    /// (a replay is read-only).
    pub accept_inputs: bool,
}

/// Runs the loop. `scheduled` must be sorted by time; each input is
/// handed to the runner just before the tick that folds it.
pub fn run_live(
    runner: &mut Runner,
    server: Option<&Server>,
    scheduled: &[TraceRecord],
    opts: LiveOptions,
    mut on_step: impl FnMut(&Step),
) -> Result<(), RunError> {
    let targets: Vec<TargetSpec> = runner.session().scene().targets.clone();
    let dt = runner.session().config().dt;
    let start = Instant::now();
    let first_tick = runner.tick_count();
    let mut next = 0;
    loop {
        if opts.ticks.is_some_and(|n| runner.tick_count() >= n) {
            break;
        }
        if opts.stop_when_finished && runner.session().finished() {
            break;
        }
        let due = runner.next_tick_time() + DUE_EPS;
        while next < scheduled.len() && scheduled[next].t <= due {
            runner.submit_at(scheduled[next].t, scheduled[next].input.clone())?;
            next += 1;
        }
        if let Some(server) = server {
            for ci in server.drain_inputs() {
                if !opts.accept_inputs {
                    ci.client.send_error("inputs are ignored while replaying".into());
                } else if let Err(e) = runner.submit(ci.input) {
                    ci.client.send_error(e.to_string());
                }
            }
        }
        let step = runner.step()?;
        if let Some(server) = server {
            for msg in event_messages(step.snapshot.tick, &step.events) {
                server.broadcast(&msg);
            }
            server
                .publish_snapshot(&Message::new(Body::Snapshot(Box::new(SnapshotMsg::new(&step.snapshot, &targets)))));
        }
        on_step(&step);
        if opts.pace {
            let elapsed_ticks = runner.tick_count() - first_tick;
            let target = start + Duration::from_secs_f64(elapsed_ticks as f64 * dt);
            let now = Instant::now();
            if target > now {
                thread::sleep(target - now);
            }
        }
    }
    Ok(())
}
