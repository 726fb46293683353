mod common;

use common::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tangible_core::fixtures::study_two_scene;
use tangible_core::sensor::PressureFrame;
use tangible_core::session::{InputEvent, InputKind, Session, SessionConfig, SessionEvent};
use tangible_core::spatial::{Pose, Vec3};

/// A minute of wandering volume, head motion and squeezes.
fn random_trace(rng: &mut ChaCha8Rng, seconds: f64) -> Vec<InputEvent> {
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut seq = 0;
    while t < seconds {
        t += rng.gen_range(0.0..0.05);
        let kind = match rng.gen_range(0..10) {
            0..=3 => {
                let p = Vec3::new(rng.gen_range(-0.4..0.4), rng.gen_range(0.0..0.4), rng.gen_range(-0.4..0.4));
                InputKind::VolumePose(Pose::new(p, orientation(rng)))
            }
            4 => InputKind::Head(Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.3..1.0), rng.gen_range(0.4..1.2))),
            5 => InputKind::FacePressure { face: rng.gen_range(0..6), value: rng.gen_range(0.0..=1.0) },
            6 => InputKind::HintPress,
            _ => {
                seq += 1;
                let level = rng.gen_range(0..=1023);
                InputKind::Pressure(PressureFrame::new(seq, (t * 1000.0) as u64, [level; 6]))
            }
        };
        out.push(InputEvent::new(t, kind));
    }
    out
}

fn hashes(events: &[InputEvent], headless: bool, ticks: u64) -> Vec<u64> {
    let config = SessionConfig { headless, ..SessionConfig::default() };
    let mut s = Session::new(study_two_scene(), config).unwrap();
    for e in events {
        s.push_input(e.clone()).unwrap();
    }
    (0..ticks).map(|_| s.tick().unwrap().state_hash()).collect()
}

#[test]
fn a_minute_of_input_replays_identically() {
    let mut rng = rng(60);
    let trace = random_trace(&mut rng, 60.0);
    let a = hashes(&trace, true, 7200);
    let b = hashes(&trace, true, 7200);
    assert_eq!(a, b);
    // the trace did change state along the way
    let distinct: std::collections::BTreeSet<u64> = a.iter().copied().collect();
    assert!(distinct.len() > 1000);
}

#[test]
fn rendering_mode_does_not_touch_the_hash() {
    let mut rng = rng(61);
    let trace = random_trace(&mut rng, 10.0);
    assert_eq!(hashes(&trace, true, 1200), hashes(&trace, false, 1200));
}

#[test]
fn input_arrival_order_within_a_timestamp_is_kept() {
    let scene = study_two_scene();
    let mut a = Session::new(scene.clone(), SessionConfig::default()).unwrap();
    let mut b = Session::new(scene, SessionConfig::default()).unwrap();
    let first = InputEvent::new(0.5, InputKind::Head(Vec3::new(0.1, 0.5, 0.6)));
    let second = InputEvent::new(0.5, InputKind::Head(Vec3::new(-0.1, 0.5, 0.6)));
    a.push_input(first.clone()).unwrap();
    a.push_input(second.clone()).unwrap();
    b.push_input(second).unwrap();
    b.push_input(first).unwrap();
    for _ in 0..61 {
        a.advance().unwrap();
        b.advance().unwrap();
    }
    assert_eq!(a.snapshot().head.x, -0.1);
    assert_eq!(b.snapshot().head.x, 0.1);
}

#[test]
fn opposite_faces_mark_a_bimanual_hold() {
    let scene = study_two_scene();
    let apple = scene.object("apple").unwrap().position();
    let mut s = Session::new(scene, SessionConfig { headless: true, ..SessionConfig::default() }).unwrap();
    s.push_input(InputEvent::new(0.0, InputKind::VolumePose(Pose::from_translation(apple)))).unwrap();
    s.push_input(InputEvent::new(0.1, InputKind::FacePressure { face: 0, value: 0.9 })).unwrap();
    s.push_input(InputEvent::new(0.2, InputKind::FacePressure { face: 1, value: 0.7 })).unwrap();
    s.push_input(InputEvent::new(0.3, InputKind::FacePressure { face: 1, value: 0.1 })).unwrap();
    let at = |s: &mut Session, t: f64| {
        while s.time() < t - 1e-9 {
            s.advance().unwrap();
        }
        s.snapshot()
    };
    let one = at(&mut s, 0.15);
    assert!(one.phase.is_grasped() && !one.bimanual);
    assert!(at(&mut s, 0.25).bimanual);
    assert!(!at(&mut s, 0.35).bimanual);
    let events = s.drain_events();
    assert_eq!(events.iter().filter(|e| matches!(e, SessionEvent::Grasp { .. })).count(), 1);
}
