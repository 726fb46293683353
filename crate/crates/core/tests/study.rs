mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use tangible_core::fixtures::{
    recalled_positions, study_one_scene, study_one_script, study_two_script, TraceBuilder, PARKED,
};
use tangible_core::interaction::GraspPhase;
use tangible_core::physics::DEFAULT_DT;
use tangible_core::session::{InputEvent, InputKind};
use tangible_core::spatial::Vec3;
use tangible_core::study::{
    recall_score, run_scenario, run_scenario_observed, FovCondition, RecallError, ScenarioError, Timeline, HINTS,
};

#[test]
fn perfect_study_one_trace_completes_without_hints() {
    let m = run_scenario(&study_one_script()).unwrap();
    assert!(!m.timed_out);
    assert_eq!(m.hints_used, 0);
    assert_eq!(m.grasp_count, 1);
    assert_eq!(m.release_count, 1);
    assert_eq!(m.sensor_errors, 0);
    let t = m.completion_times[0].expect("target completed");
    // carry ends at 3.5 s; the drop and half a second of rest follow
    assert!(t > 3.5 && t < 5.0, "completion after {t} s");
}

#[test]
fn fly_over_does_not_complete_the_target() {
    let script = study_one_script();
    let target = script.scene.targets[0].clone();
    let mut over_while_held = 0;
    run_scenario_observed(&script, |s| {
        let apple = &s.objects[0];
        let d = apple.pose.translation - target.center;
        let inside = (d.x * d.x + d.z * d.z).sqrt() <= target.radius;
        if inside && matches!(s.phase, GraspPhase::Grasped(_)) {
            over_while_held += 1;
            assert_eq!(s.completed_targets, 0);
        }
        if s.completed_targets == 1 {
            assert!(apple.asleep);
        }
    })
    .unwrap();
    assert!(over_while_held > 0);
}

#[test]
fn hint_ladder_reveals_in_order_and_stops() {
    let mut b = TraceBuilder::new();
    for k in 0..5 {
        b.hint(0.5 + k as f64);
    }
    let mut script = study_one_script();
    script.trace = b.build();
    script.horizon = 8.0;
    let mut seen = Vec::new();
    run_scenario_observed(&script, |s| seen.push(s.hints_revealed)).unwrap();
    assert_eq!(*seen.last().unwrap(), HINTS.len());
    assert!(seen.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
    assert_eq!(HINTS[0], "Put the cube onto the apple");
    assert_eq!(HINTS[1], "Press the cube to grab the apple");
    assert_eq!(HINTS[2], "Move the cube while maintaining the pressure");
}

#[test]
fn empty_trace_times_out() {
    let mut script = study_one_script();
    script.trace.clear();
    script.horizon = 5.0;
    let m = run_scenario(&script).unwrap();
    assert!(m.timed_out);
    assert_eq!(m.completion_times, vec![None]);
    assert!((m.end_time - 5.0).abs() < 1e-9);
}

#[test]
fn study_two_timeline_follows_completions() {
    let m = run_scenario(&study_two_script(FovCondition::Narrow)).unwrap();
    assert!(!m.timed_out);
    let appeared: Vec<f64> = m.target_appeared.iter().map(|a| a.unwrap()).collect();
    let done: Vec<f64> = m.completion_times.iter().map(|c| c.unwrap()).collect();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    assert!(close(appeared[0], 15.0));
    assert!(close(appeared[1], appeared[0] + done[0] + 10.0));
    assert!(close(appeared[2], appeared[1] + done[1] + 12.0));
    assert!(close(m.end_time, appeared[2] + done[2] + 20.0));
    assert!(done.iter().all(|&d| d > 0.0));
    assert_eq!(m.grasp_count, 3);
}

#[test]
fn fov_condition_never_changes_simulation_state() {
    let narrow = study_two_script(FovCondition::Narrow);
    let mut wide = study_two_script(FovCondition::Wide);
    // toggling mid-run is also rendering only
    wide.trace.push(InputEvent::new(30.0, InputKind::SetFov(FovCondition::Narrow)));
    wide.trace.push(InputEvent::new(31.0, InputKind::SetFov(FovCondition::Wide)));
    wide.trace.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut a = Vec::new();
    let mut b = Vec::new();
    let ma = run_scenario_observed(&narrow, |s| a.push(s.state_hash())).unwrap();
    let mb = run_scenario_observed(&wide, |s| b.push(s.state_hash())).unwrap();
    assert_eq!(a.len(), b.len());
    assert_eq!(a, b);
    assert_eq!(ma.final_hash, mb.final_hash);
    assert_eq!(ma.fov, FovCondition::Narrow);
    assert_eq!(mb.fov, FovCondition::Wide);
}

#[test]
fn replaying_a_script_gives_identical_metrics() {
    let mut script = study_two_script(FovCondition::Wide);
    let actual: BTreeMap<String, Vec3> = script.scene.objects.iter().map(|o| (o.id.clone(), o.position())).collect();
    script.reported = Some(recalled_positions(&actual, 0.05));
    let a = run_scenario(&script).unwrap();
    let b = run_scenario(&script).unwrap();
    assert_eq!(a, b);
    let r = a.recall_score.unwrap();
    assert!((0.0..=1.0).contains(&r));
}

#[test]
fn reports_for_unknown_objects_are_rejected() {
    let mut script = study_one_script();
    let mut reported = BTreeMap::new();
    reported.insert("apple".to_string(), Vec3::ZERO);
    reported.insert("pear".to_string(), Vec3::ZERO);
    script.reported = Some(reported);
    assert_eq!(run_scenario(&script), Err(ScenarioError::UnknownObject("pear".into())));
}

#[test]
fn trace_going_back_in_time_is_rejected() {
    let mut script = study_one_script();
    script.trace = vec![InputEvent::new(1.0, InputKind::HintPress), InputEvent::new(0.5, InputKind::HintPress)];
    assert_eq!(run_scenario(&script), Err(ScenarioError::TraceNotMonotone { index: 1 }));
}

#[test]
fn targets_appear_in_whole_ticks() {
    let mut script = study_one_script();
    script.timeline = Timeline { delays: vec![0.7], final_delay: None };
    script.trace.clear();
    script.horizon = 1.0;
    let m = run_scenario(&script).unwrap();
    let t = m.target_appeared[0].unwrap();
    assert!((t / DEFAULT_DT - (t / DEFAULT_DT).round()).abs() < 1e-9);
    assert!((t - 0.7).abs() <= DEFAULT_DT / 2.0 + 1e-12);
}

#[test]
fn recall_matches_per_object_formula() {
    let mut rng = rng(40);
    for _ in 0..500 {
        let n = rng.gen_range(1..10);
        let actual: BTreeMap<String, Vec3> = (0..n).map(|i| (format!("o{i}"), vec3(&mut rng, 1.0))).collect();
        let reported: BTreeMap<String, Vec3> =
            actual.iter().map(|(k, v)| (k.clone(), *v + vec3(&mut rng, 0.6))).collect();
        let norm = rng.gen_range(0.1..2.0);
        let mut sum = 0.0;
        for (id, a) in &actual {
            let r = reported[id];
            let err = ((r.x - a.x).powi(2) + (r.y - a.y).powi(2) + (r.z - a.z).powi(2)).sqrt();
            sum += (1.0 - err / norm).max(0.0);
        }
        let expected = sum / n as f64;
        assert!((recall_score(&reported, &actual, norm).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn recall_boundaries_and_errors() {
    let actual: BTreeMap<String, Vec3> =
        [("a", Vec3::ZERO), ("b", Vec3::X)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    assert_eq!(recall_score(&actual, &actual, 0.5).unwrap(), 1.0);
    let far = recalled_positions(&actual, 0.5);
    assert!(recall_score(&far, &actual, 0.5).unwrap().abs() < 1e-12);
    let mut missing = actual.clone();
    missing.remove("b");
    assert_eq!(recall_score(&missing, &actual, 1.0), Err(RecallError::MismatchedIds));
    assert_eq!(recall_score(&actual, &actual, 0.0), Err(RecallError::InvalidNorm(0.0)));
}

proptest! {
    #[test]
    fn recall_never_increases_with_error(
        errors in prop::collection::vec(0.0f64..2.0, 1..8),
        grow in 0usize..8,
        extra in 0.0f64..1.0,
        norm in 0.05f64..3.0,
    ) {
        let actual: BTreeMap<String, Vec3> =
            (0..errors.len()).map(|i| (format!("o{i}"), Vec3::new(i as f64, 0.0, 0.0))).collect();
        let place = |errs: &[f64]| -> BTreeMap<String, Vec3> {
            actual.iter().zip(errs).map(|((k, v), e)| (k.clone(), *v + Vec3::new(0.0, *e, 0.0))).collect()
        };
        let base = recall_score(&place(&errors), &actual, norm).unwrap();
        let mut worse = errors.clone();
        let i = grow % worse.len();
        worse[i] += extra;
        let after = recall_score(&place(&worse), &actual, norm).unwrap();
        prop_assert!(after <= base + 1e-15);
        prop_assert!((0.0..=1.0).contains(&after));
        prop_assert_eq!(recall_score(&actual, &actual, norm).unwrap(), 1.0);
    }
}

#[test]
fn parked_volume_holds_no_candidate() {
    // the rest position used by the fixtures must not overlap any object
    let scene = study_one_scene();
    for o in &scene.objects {
        assert!((o.position() - PARKED).max_abs() > 0.1);
    }
}
