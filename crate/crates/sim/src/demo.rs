//! Seeded synthetic participant: wanders the cube to objects, squeezes,
//! carries them somewhere else and lets go, while the head drifts and a
//! 10 Hz pressure stream runs underneath.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tangible_core::scene::Scene;
use tangible_core::sensor::{RAW_MAX, SAMPLE_PERIOD_MS};
use tangible_core::spatial::{Orientation, Vec3};

use crate::doc::{rotation_to_xyzw, FovDoc};
use crate::input::{InputMsg, TraceRecord};

const FRAME_S: f64 = SAMPLE_PERIOD_MS as f64 / 1000.0;

struct Gen {
    rng: ChaCha8Rng,
    out: Vec<TraceRecord>,
    /// Raw level per face over time, sampled into frames at the end.
    squeeze: Vec<(f64, [u16; 6])>,
}

impl Gen {
    fn push(&mut self, t: f64, input: InputMsg) {
        self.out.push(TraceRecord { t, input });
    }

    fn volume(&mut self, t: f64, p: Vec3, r: Orientation) {
        self.push(t, InputMsg::SetVolumePose { position: p.to_array(), rotation: rotation_to_xyzw(r) });
    }

    fn small_rotation(&mut self) -> Orientation {
        let axis =
            Vec3::new(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0));
        Orientation::from_axis_angle(axis, self.rng.gen_range(-0.5..0.5))
    }

    fn grip(&mut self) -> [u16; 6] {
        let level = self.rng.gen_range(600..=RAW_MAX);
        let mut raw = [0u16; 6];
        let first = self.rng.gen_range(0..6);
        raw[first] = level;
        // sometimes both hands: the opposite face too
        if self.rng.gen_bool(0.3) {
            raw[first ^ 1] = self.rng.gen_range(520..=RAW_MAX);
        }
        raw
    }
}

/// Inputs for `duration` seconds, identical for identical seeds and
/// scenes. Sorted by time.
pub fn demo_inputs(seed: u64, duration: f64, scene: &Scene) -> Vec<TraceRecord> {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), out: Vec::new(), squeeze: Vec::new() };
    // where the generator believes each object rests
    let mut spots: Vec<(Vec3, f64)> = scene.objects.iter().map(|o| (o.position(), o.radius)).collect();
    let ground = scene.ground_y;

    let orbit = g.rng.gen_range(0.05..0.3);
    let phase = g.rng.gen_range(0.0..std::f64::consts::TAU);
    let mut t = 0.0;
    while t < duration {
        let a = phase + orbit * t;
        g.push(t, InputMsg::SetHead { position: [0.6 * a.sin(), 0.45, 0.6 * a.cos()] });
        t += 0.25;
    }

    let mut t = 0.2;
    while t < duration {
        let pick = if spots.is_empty() { None } else { Some(g.rng.gen_range(0..spots.len())) };
        let start = match pick {
            Some(i) => spots[i].0,
            None => Vec3::new(g.rng.gen_range(-0.3..0.3), g.rng.gen_range(0.05..0.3), g.rng.gen_range(-0.3..0.3)),
        };
        let rot = g.small_rotation();
        // approach
        for k in 1..=5 {
            let lift = 0.15 * (1.0 - k as f64 / 5.0);
            g.volume(t + 0.1 * k as f64, start + Vec3::new(0.0, lift, 0.0), rot);
        }
        t += 0.6;
        let grip = g.grip();
        g.squeeze.push((t, grip));
        let dest = Vec3::new(g.rng.gen_range(-0.4..0.4), ground, g.rng.gen_range(-0.4..0.4));
        let carry = g.rng.gen_range(1.0..2.5);
        let steps = (carry / FRAME_S) as usize;
        let end_rot = rot.mul(g.small_rotation());
        let radius = pick.map_or(0.05, |i| spots[i].1);
        for k in 1..=steps {
            let s = k as f64 / steps as f64;
            let arc = 0.12 * (std::f64::consts::PI * s).sin();
            let mut p = start + (dest - start) * s + Vec3::new(0.0, arc, 0.0);
            p.y = p.y.max(ground + radius);
            let r = if s < 1.0 { rot } else { end_rot };
            g.volume(t + carry * s, p, r);
        }
        t += carry + 0.1;
        g.squeeze.push((t, [0; 6]));
        if let Some(i) = pick {
            spots[i].0 = Vec3::new(dest.x, ground + radius, dest.z);
        }
        if g.rng.gen_bool(0.15) {
            g.push(t + 0.05, InputMsg::PressHint);
        }
        if g.rng.gen_bool(0.1) {
            let fov = *[FovDoc::Narrow, FovDoc::Wide].choose(&mut g.rng).expect("non-empty");
            g.push(t + 0.05, InputMsg::SetFov { fov });
        }
        t += g.rng.gen_range(0.5..1.5);
    }

    // the 10 Hz stream, holding the latest squeeze level
    let frames = (duration / FRAME_S).floor() as u64;
    let mut level = [0u16; 6];
    let mut next = 0;
    for k in 0..frames {
        let ft = k as f64 * FRAME_S;
        while next < g.squeeze.len() && g.squeeze[next].0 <= ft {
            level = g.squeeze[next].1;
            next += 1;
        }
        let t_ms = k * SAMPLE_PERIOD_MS;
        g.push(ft, InputMsg::PressureFrame { seq: k as u32, t_ms, raw: level });
    }

    let mut out = g.out;
    out.retain(|r| r.t < duration);
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}
