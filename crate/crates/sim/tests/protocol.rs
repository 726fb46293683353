use serde_json::{json, Value};
use tangible_core::fixtures::study_one_scene;
use tangible_core::session::{InputEvent, InputKind, Session, SessionConfig, SessionEvent};
use tangible_core::spatial::{Pose, Vec3};
use tangible_sim::protocol::{event_messages, input_line, parse_client_line, Body, EventMsg, Message, SnapshotMsg};
use tangible_sim::record::parse_hash_hex;
use tangible_sim::InputMsg;

fn snapshot_json(headless: bool) -> (Value, u64) {
    let scene = study_one_scene();
    let mut s = Session::new(scene.clone(), SessionConfig { headless, ..SessionConfig::default() }).unwrap();
    s.push_input(InputEvent::new(0.0, InputKind::VolumePose(Pose::from_translation(Vec3::new(0.25, 0.035, 0.0)))))
        .unwrap();
    let snap = s.tick().unwrap();
    let msg = Message::new(Body::Snapshot(Box::new(SnapshotMsg::new(&snap, &scene.targets))));
    let line = msg.to_line();
    assert!(line.ends_with('\n') && !line[..line.len() - 1].contains('\n'));
    let back: Message = serde_json::from_str(&line).unwrap();
    assert_eq!(back, msg);
    (serde_json::from_str(&line).unwrap(), snap.state_hash())
}

#[test]
fn snapshot_fields_and_units() {
    let (v, hash) = snapshot_json(false);
    assert_eq!(v["v"], 1);
    assert_eq!(v["type"], "snapshot");
    assert_eq!(parse_hash_hex(v["hash"].as_str().unwrap()), Some(hash));
    assert_eq!(v["phase"], "candidate");
    assert_eq!(v["candidate"], "apple");
    assert_eq!(v["outline_id"], "apple");
    assert_eq!(v["grasped"], Value::Null);
    assert_eq!(v["volume"]["rotation"], json!([0.0, 0.0, 0.0, 1.0]));
    assert_eq!(v["objects"][0]["rotation"].as_array().unwrap().len(), 4);
    assert_eq!(v["pressures"].as_array().unwrap().len(), 6);
    assert_eq!(v["targets"][0]["state"], "active");
    assert_eq!(v["fov"], "narrow");
    let cams = v["cameras"].as_array().unwrap();
    assert!((1..=3).contains(&cams.len()));
    for c in cams {
        assert_eq!(c["view"].as_array().unwrap().len(), 4);
        assert_eq!(c["projection"][3], json!([0.0, 0.0, -1.0, 0.0]), "row-major, last row of a perspective matrix");
        assert_eq!(c["corners"].as_array().unwrap().len(), 4);
    }
}

#[test]
fn headless_snapshots_carry_no_cameras_and_the_same_hash() {
    let (a, ha) = snapshot_json(true);
    let (b, hb) = snapshot_json(false);
    assert!(a["cameras"].as_array().unwrap().is_empty());
    assert_eq!(ha, hb);
    assert_eq!(a["hash"], b["hash"]);
}

#[test]
fn events_and_hints() {
    let msgs = event_messages(
        7,
        &[
            SessionEvent::Grasp { id: "apple".into() },
            SessionEvent::HintRevealed { index: 0, text: "squeeze" },
            SessionEvent::TargetComplete { index: 0, object: "apple".into(), elapsed: 1.5 },
            SessionEvent::Finished,
        ],
    );
    let v: Vec<Value> = msgs.iter().map(|m| serde_json::from_str(&m.to_line()).unwrap()).collect();
    assert_eq!(v[0], json!({"v": 1, "type": "event", "tick": 7, "event": {"kind": "grasp", "id": "apple"}}));
    assert_eq!(v[1], json!({"v": 1, "type": "hint", "index": 0, "text": "squeeze"}));
    assert_eq!(v[2]["event"], json!({"kind": "target_complete", "index": 0, "object": "apple", "elapsed_s": 1.5}));
    assert_eq!(v[3]["event"], json!({"kind": "finished"}));
    assert!(matches!(&msgs[0].body, Body::Event { event: EventMsg::Grasp { .. }, .. }));
}

#[test]
fn client_lines() {
    let inputs = [
        InputMsg::SetVolumePose { position: [0.1, 0.2, 0.3], rotation: [0.0, 0.0, 0.0, 1.0] },
        InputMsg::SetHead { position: [0.0, 0.5, 0.6] },
        InputMsg::SetFacePressure { face: 2, value: 0.7 },
        InputMsg::PressureFrame { seq: 3, t_ms: 300, raw: [0, 1, 2, 3, 4, 1023] },
        InputMsg::PressHint,
        InputMsg::SetFov { fov: tangible_sim::doc::FovDoc::Wide },
    ];
    for input in inputs {
        assert_eq!(parse_client_line(input_line(input.clone()).trim_end()).unwrap(), input);
    }
    assert_eq!(
        parse_client_line(r#"{"v":1,"type":"input","input":{"kind":"set_head","position":[1,2,3]}}"#).unwrap(),
        InputMsg::SetHead { position: [1.0, 2.0, 3.0] }
    );
    // rotation defaults to identity
    assert_eq!(
        parse_client_line(r#"{"v":1,"type":"input","input":{"kind":"set_volume_pose","position":[0,0,0]}}"#).unwrap(),
        InputMsg::SetVolumePose { position: [0.0; 3], rotation: [0.0, 0.0, 0.0, 1.0] }
    );
    let bad = [
        r#"{"v":2,"type":"input","input":{"kind":"press_hint"}}"#,
        r#"{"type":"input","input":{"kind":"press_hint"}}"#,
        r#"{"v":1,"type":"snapshot","input":{"kind":"press_hint"}}"#,
        r#"{"v":1,"type":"input","input":{"kind":"teleport"}}"#,
        r#"{"v":1,"type":"input","input":{"kind":"press_hint"},"extra":1}"#,
        r#"{"v":1,"type":"input","input":{"kind":"set_head","position":[1,2]}}"#,
        "not json",
    ];
    for line in bad {
        assert!(parse_client_line(line).is_err(), "{line}");
    }
}
