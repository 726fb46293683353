mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use tangible_core::interaction::Thresholds;
use tangible_core::scene::{Scene, VirtualObject};
use tangible_core::sensor::{
    emulate_stream, encode_frame, normalize, parse_frame, Calibration, Curve, Envelope, FrameDecoder, FrameError,
    PressureFrame, MAX_LINE_LEN, RAW_MAX,
};
use tangible_core::session::{InputEvent, InputKind, Session, SessionConfig};
use tangible_core::spatial::Pose;

fn arb_frame() -> impl Strategy<Value = PressureFrame> {
    (any::<u32>(), any::<u64>(), prop::array::uniform6(0u16..=RAW_MAX))
        .prop_map(|(seq, t, raw)| PressureFrame::new(seq, t, raw))
}

proptest! {
    #[test]
    fn encode_then_parse_is_identity(f in arb_frame()) {
        let line = encode_frame(&f).unwrap();
        let expected = format!(
            "P {} {} {} {} {} {} {} {}\n",
            f.seq, f.t_ms, f.raw[0], f.raw[1], f.raw[2], f.raw[3], f.raw[4], f.raw[5]
        );
        prop_assert_eq!(&line, &expected);
        prop_assert_eq!(parse_frame(line.as_bytes()).unwrap(), f);
    }

    #[test]
    fn decoding_ignores_chunk_boundaries(
        frames in prop::collection::vec(arb_frame(), 1..20),
        cuts in prop::collection::vec(0usize..2000, 0..30),
    ) {
        let stream: Vec<u8> = frames.iter().flat_map(|f| encode_frame(f).unwrap().into_bytes()).collect();
        let whole = FrameDecoder::new().decode(&stream);
        let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c % (stream.len() + 1)).collect();
        cuts.sort_unstable();
        let mut dec = FrameDecoder::new();
        let mut pieces = Vec::new();
        let mut start = 0;
        for c in cuts.into_iter().chain([stream.len()]) {
            dec.push(&stream[start..c], &mut pieces);
            start = c;
        }
        prop_assert_eq!(whole, pieces);
        prop_assert_eq!(dec.pending(), 0);
    }
}

#[test]
fn exact_lines_from_the_format() {
    assert_eq!(encode_frame(&PressureFrame::new(0, 0, [0; 6])).unwrap(), "P 0 0 0 0 0 0 0 0\n");
    assert_eq!(encode_frame(&PressureFrame::new(7, 700, [0, 0, 512, 0, 0, 0])).unwrap(), "P 7 700 0 0 512 0 0 0\n");
    assert_eq!(parse_frame(b"P 0 0 0 0 0 0 0 0\n").unwrap(), PressureFrame::new(0, 0, [0; 6]));
    assert!(encode_frame(&PressureFrame::new(0, 0, [0, 0, 1024, 0, 0, 0])).is_err());
}

#[test]
fn malformed_lines_are_rejected_by_cause_and_the_stream_recovers() {
    let long = format!("P 1 {} 0 0 0 0 0 0", "9".repeat(MAX_LINE_LEN));
    let corpus: Vec<(Vec<u8>, FrameError)> = vec![
        (b"P 1 100 0 0 2000 0 0 0".to_vec(), FrameError::OutOfRange { field: 5 }),
        (b"P 1 100 0 0 0".to_vec(), FrameError::FieldCount { found: 6 }),
        (b"Q 1 100 0 0 0 0 0 0".to_vec(), FrameError::WrongTag),
        (b"P 1 1x0 0 0 0 0 0 0".to_vec(), FrameError::NotNumeric { field: 2 }),
        (b"P -1 100 0 0 0 0 0 0".to_vec(), FrameError::NotNumeric { field: 1 }),
        (b"P 1 100 0 0 0 0 0 0 0".to_vec(), FrameError::FieldCount { found: 10 }),
        (b"P 1  100 0 0 0 0 0 0".to_vec(), FrameError::FieldCount { found: 10 }),
        (b"".to_vec(), FrameError::Empty),
        (b"P 1 100 0 0 0 0 0 \xff".to_vec(), FrameError::NotAscii),
        (b"P 4294967296 100 0 0 0 0 0 0".to_vec(), FrameError::OutOfRange { field: 1 }),
        (b"P 1 100 0 0 0 0 0 1024".to_vec(), FrameError::OutOfRange { field: 8 }),
        (b"P 1 100 0 0 0 0 0 +1".to_vec(), FrameError::NotNumeric { field: 8 }),
        (b"p 1 100 0 0 0 0 0 0".to_vec(), FrameError::WrongTag),
        (long.into_bytes(), FrameError::LineTooLong),
    ];
    let mut dec = FrameDecoder::new();
    for (k, (bad, cause)) in corpus.iter().enumerate() {
        let good = PressureFrame::new(k as u32, 100 * k as u64, [k as u16; 6]);
        let mut bytes = bad.clone();
        bytes.push(b'\n');
        bytes.extend_from_slice(encode_frame(&good).unwrap().as_bytes());
        let out = dec.decode(&bytes);
        assert_eq!(out, vec![Err(cause.clone()), Ok(good)], "case {k}");
    }
}

#[test]
fn truncated_line_then_valid_line() {
    let mut dec = FrameDecoder::new();
    let out = dec.decode(b"P 3 300 0 0\nP 4 400 1 2 3 4 5 6\n");
    assert_eq!(out, vec![Err(FrameError::FieldCount { found: 5 }), Ok(PressureFrame::new(4, 400, [1, 2, 3, 4, 5, 6]))]);
}

#[test]
fn sequence_must_increase() {
    let mut dec = FrameDecoder::new();
    let out = dec.decode(b"P 5 500 0 0 0 0 0 0\nP 5 600 0 0 0 0 0 0\nP 6 600 0 0 0 0 0 0\n");
    assert!(out[0].is_ok());
    assert_eq!(out[1], Err(FrameError::SeqNotIncreasing { previous: 5, found: 5 }));
    assert!(out[2].is_ok());
}

#[test]
#[allow(clippy::manual_clamp)]
fn normalize_matches_formula() {
    let mut rng = rng(50);
    for _ in 0..10_000 {
        let mut baseline = [0u16; 6];
        let mut span = [0u16; 6];
        let mut raw = [0u16; 6];
        for i in 0..6 {
            baseline[i] = rng.gen_range(0..RAW_MAX);
            span[i] = rng.gen_range(1..=RAW_MAX - baseline[i]);
            raw[i] = rng.gen_range(0..=RAW_MAX);
        }
        let cal = Calibration::new(baseline, span).unwrap();
        let p = normalize(&PressureFrame::new(0, 0, raw), &cal);
        for i in 0..6 {
            let v = (raw[i] as f64 - baseline[i] as f64) / span[i] as f64;
            let expected = if v < 0.0 {
                0.0
            } else if v > 1.0 {
                1.0
            } else {
                v
            };
            assert_eq!(p[i], expected);
        }
        let at_base = normalize(&PressureFrame::new(0, 0, baseline), &cal);
        assert!(at_base.iter().all(|&v| v == 0.0));
        let mut top = baseline;
        for i in 0..6 {
            top[i] += span[i];
        }
        assert!(normalize(&PressureFrame::new(0, 0, top), &cal).iter().all(|&v| v == 1.0));
    }
    assert!(Calibration::new([0; 6], [0; 6]).is_err());
    assert!(Calibration::new([1000; 6], [24; 6]).is_err());
}

fn step_envelope(at: f64) -> Envelope {
    let step = Curve::new(vec![(0.0, 0.0), (at, 0.0), (at, RAW_MAX as f64)]).unwrap();
    let mut env = Envelope::default();
    env.faces[2] = step;
    env
}

#[test]
fn one_second_of_silence() {
    let frames = emulate_stream(&Envelope::default(), 1.0);
    assert_eq!(frames.len(), 10);
    for (k, f) in frames.iter().enumerate() {
        assert_eq!(f.seq, k as u32);
        assert_eq!(f.t_ms, 100 * k as u64);
        assert_eq!(f.raw, [0; 6]);
    }
}

#[test]
fn step_at_450ms_is_first_seen_at_seq_5() {
    let frames = emulate_stream(&step_envelope(0.45), 2.0);
    let on = Thresholds::default().theta_on();
    let first = frames.iter().find(|f| normalize(f, &Calibration::default()).iter().any(|&p| p >= on)).unwrap();
    assert_eq!(first.seq, 5);
    assert_eq!(first.t_ms, 500);
}

#[test]
fn frame_count_is_floor_of_ten_per_second() {
    let mut rng = rng(51);
    for _ in 0..1000 {
        let n = rng.gen_range(0.0..30.0);
        assert_eq!(emulate_stream(&Envelope::default(), n).len(), (10.0 * n).floor() as usize);
    }
    for n in [0.0, 0.1, 0.3, 0.7, 2.9, 12.3] {
        assert_eq!(emulate_stream(&Envelope::default(), n).len(), (10.0f64 * n + 1e-9).floor() as usize);
    }
}

#[test]
fn ramp_is_sampled_monotone() {
    let ramp = Curve::new(vec![(0.0, 0.0), (3.0, RAW_MAX as f64)]).unwrap();
    let env = Envelope { faces: std::array::from_fn(|_| ramp.clone()) };
    let frames = emulate_stream(&env, 4.0);
    for w in frames.windows(2) {
        for i in 0..6 {
            assert!(w[1].raw[i] >= w[0].raw[i]);
        }
    }
    assert_eq!(frames.last().unwrap().raw, [RAW_MAX; 6]);
}

#[test]
fn grasp_follows_a_crossing_within_one_sample() {
    let mut rng = rng(52);
    for _ in 0..50 {
        let at = rng.gen_range(0.05..2.0);
        let scene = Scene {
            objects: vec![VirtualObject::new("a", "a", Pose::IDENTITY, 0.02, true)],
            gravity_enabled: false,
            ..Scene::default()
        };
        let mut s = Session::new(scene, SessionConfig { headless: true, ..SessionConfig::default() }).unwrap();
        for f in emulate_stream(&step_envelope(at), 3.0) {
            s.push_input(InputEvent::new(f.t_ms as f64 / 1000.0, InputKind::Pressure(f))).unwrap();
        }
        let mut grasped_at = None;
        while s.time() < 3.0 {
            let snap = s.tick().unwrap();
            if grasped_at.is_none() && snap.phase.is_grasped() {
                grasped_at = Some(snap.time);
            }
        }
        let t = grasped_at.unwrap();
        assert!(t >= at - 1e-9 && t - at <= 0.1 + 1e-9, "crossing {at}, grasp {t}");
    }
}
