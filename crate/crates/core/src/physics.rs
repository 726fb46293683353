//! Minimal rigid-body integrator for released objects.
//!
//! Bodies are translation-only unit-mass spheres. Each step integrates
//! gravity with semi-implicit Euler, then resolves ground contacts and
//! pairwise sphere contacts (in id order) by projection with a
//! restitution-only velocity response. A step normally needs one sweep;
//! extra sweeps run only while a multi-body contact still overlaps. Grasped objects are kinematic and
//! act as immovable obstacles; non-dynamic objects are static obstacles.

use alloc::collections::BTreeMap;
use alloc::string::String;

use crate::scene::Scene;
use crate::spatial::Vec3;

pub const DEFAULT_DT: f64 = 1.0 / 120.0;
pub const SLEEP_SPEED: f64 = 0.01;
pub const SLEEP_TIME: f64 = 0.5;
/// Upper bound on contact sweeps per step.
pub const MAX_CONTACT_PASSES: usize = 16;
/// Overlap below which a sweep counts as converged.
pub const CONTACT_SLOP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsConfig {
    pub restitution: f64,
    pub sleep_speed: f64,
    pub sleep_time: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig { restitution: 0.0, sleep_speed: SLEEP_SPEED, sleep_time: SLEEP_TIME }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    pub velocity: Vec3,
    pub asleep: bool,
    /// Continuous time spent below the sleep speed.
    pub still_time: f64,
}

/// Body states keyed by object id; iteration order is id order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bodies {
    states: BTreeMap<String, BodyState>,
}

impl Bodies {
    /// One awake, motionless body per dynamic object.
    pub fn for_scene(scene: &Scene) -> Bodies {
        let states = scene.objects.iter().filter(|o| o.dynamic).map(|o| (o.id.clone(), BodyState::default())).collect();
        Bodies { states }
    }

    pub fn get(&self, id: &str) -> Option<&BodyState> {
        self.states.get(id)
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut BodyState> {
        self.states.get_mut(id)
    }

    pub fn is_asleep(&self, id: &str) -> bool {
        self.states.get(id).is_some_and(|b| b.asleep)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BodyState)> {
        self.states.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Reactivates a body with zero velocity for a just-released object.
pub fn on_release(id: &str, bodies: &mut Bodies) {
    bodies.states.insert(id.into(), BodyState::default());
}

/// Which objects a step may move.
fn movable(scene: &Scene, bodies: &Bodies, grasped: Option<&str>, index: usize) -> bool {
    let obj = &scene.objects[index];
    obj.dynamic && grasped != Some(obj.id.as_str()) && bodies.states.contains_key(&obj.id)
}

/// Advances the simulation by `dt` seconds.
pub fn step_physics(scene: &mut Scene, bodies: &mut Bodies, grasped: Option<&str>, cfg: &PhysicsConfig, dt: f64) {
    debug_assert!(dt > 0.0);
    let g = if scene.gravity_enabled { scene.gravity } else { 0.0 };

    // Integrate in id order (the BTreeMap order).
    for (id, body) in bodies.states.iter_mut() {
        if body.asleep || grasped == Some(id.as_str()) {
            continue;
        }
        let Some(obj) = scene.objects.iter_mut().find(|o| &o.id == id && o.dynamic) else {
            continue;
        };
        body.velocity.y -= g * dt;
        obj.pose.translation += body.velocity * dt;
    }

    let order = id_order(scene);
    let e = cfg.restitution;

    // The first pass is the plain ground-then-pairs sweep; further passes
    // only run while contacts still overlap (multi-body contact).
    for _ in 0..MAX_CONTACT_PASSES {
        let ground = resolve_ground(scene, bodies, grasped, &order, e);
        let pairs = resolve_pairs(scene, bodies, grasped, &order, e);
        if ground.max(pairs) <= CONTACT_SLOP {
            break;
        }
    }
    // the floor always wins
    let _ = resolve_ground(scene, bodies, grasped, &order, e);

    for body in bodies.states.values_mut() {
        if body.asleep {
            continue;
        }
        if body.velocity.length() < cfg.sleep_speed {
            body.still_time += dt;
            if body.still_time >= cfg.sleep_time - 1e-9 {
                body.asleep = true;
                body.velocity = Vec3::ZERO;
            }
        } else {
            body.still_time = 0.0;
        }
    }
}

fn resolve_pairs(scene: &mut Scene, bodies: &mut Bodies, grasped: Option<&str>, order: &[usize], e: f64) -> f64 {
    let mut deepest = 0.0f64;
    for a in 0..order.len() {
        for b in (a + 1)..order.len() {
            let (i, j) = (order[a], order[b]);
            let mi = movable(scene, bodies, grasped, i);
            let mj = movable(scene, bodies, grasped, j);
            if !mi && !mj {
                continue;
            }
            let pi = scene.objects[i].pose.translation;
            let pj = scene.objects[j].pose.translation;
            let min_dist = scene.objects[i].radius + scene.objects[j].radius;
            let delta = pj - pi;
            let dist = delta.length();
            if dist >= min_dist {
                continue;
            }
            let normal = delta.normalized().unwrap_or(Vec3::Y);
            let depth = min_dist - dist;
            deepest = deepest.max(depth);
            let (wi, wj) = match (mi, mj) {
                (true, true) => (0.5, 0.5),
                (true, false) => (1.0, 0.0),
                _ => (0.0, 1.0),
            };
            scene.objects[i].pose.translation -= normal * (depth * wi);
            scene.objects[j].pose.translation += normal * (depth * wj);

            let vi = if mi { bodies.states[&scene.objects[i].id].velocity } else { Vec3::ZERO };
            let vj = if mj { bodies.states[&scene.objects[j].id].velocity } else { Vec3::ZERO };
            let approach = (vj - vi).dot(normal);
            let impulse = if approach < 0.0 { -(1.0 + e) * approach } else { 0.0 };
            if mi {
                let body = bodies.states.get_mut(&scene.objects[i].id).unwrap();
                body.velocity -= normal * (impulse * wi);
                wake(body);
            }
            if mj {
                let body = bodies.states.get_mut(&scene.objects[j].id).unwrap();
                body.velocity += normal * (impulse * wj);
                wake(body);
            }
        }
    }
    deepest
}

fn wake(body: &mut BodyState) {
    if body.asleep {
        body.asleep = false;
        body.still_time = 0.0;
    }
}

fn resolve_ground(scene: &mut Scene, bodies: &mut Bodies, grasped: Option<&str>, order: &[usize], e: f64) -> f64 {
    let mut deepest = 0.0f64;
    for &i in order {
        if !movable(scene, bodies, grasped, i) {
            continue;
        }
        let ground = scene.ground_y;
        let obj = &mut scene.objects[i];
        let floor = ground + obj.radius;
        if obj.pose.translation.y < floor {
            deepest = deepest.max(floor - obj.pose.translation.y);
            obj.pose.translation.y = floor;
            let body = bodies.states.get_mut(&obj.id).unwrap();
            if body.velocity.y < 0.0 {
                body.velocity.y *= -e;
            }
        }
    }
    deepest
}

fn id_order(scene: &Scene) -> alloc::vec::Vec<usize> {
    let mut order: alloc::vec::Vec<usize> = (0..scene.objects.len()).collect();
    order.sort_by(|&a, &b| scene.objects[a].id.cmp(&scene.objects[b].id));
    order
}

/// Gravitational plus kinetic energy of all free bodies, unit mass.
pub fn mechanical_energy(scene: &Scene, bodies: &Bodies, grasped: Option<&str>) -> f64 {
    let g = if scene.gravity_enabled { scene.gravity } else { 0.0 };
    let mut total = 0.0;
    for (id, body) in bodies.iter() {
        if grasped == Some(id) {
            continue;
        }
        if let Some(obj) = scene.object(id) {
            total += g * (obj.position().y - scene.ground_y) + 0.5 * body.velocity.length_squared();
        }
    }
    total
}

/// Deepest sphere-ground or sphere-sphere overlap in the scene.
pub fn max_penetration(scene: &Scene) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in scene.objects.iter().enumerate() {
        worst = worst.max(scene.ground_y + a.radius - a.position().y);
        for b in &scene.objects[i + 1..] {
            worst = worst.max(a.radius + b.radius - a.position().distance(b.position()));
        }
    }
    worst
}
