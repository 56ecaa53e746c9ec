//! Event-driven analytic rigid-body simulation.
//!
//! Each object moves on a piecewise constant-acceleration trajectory. Ground
//! contacts are found from the closed-form roots of the vertical ballistic
//! quadratic; object pairs (bounding spheres) from the roots of the relative
//! distance polynomial. Between events positions are evaluated in closed
//! form, so frame samples carry no integration error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::synth::scene::SceneSpec;

/// Rebounds lower than this apex (m) settle into resting contact.
const REST_APEX_M: f64 = 1e-5;
/// Pair contacts slower than this (m/s) are ignored.
/// Pair contacts leave with at least this normal speed (m/s) so resting stacks chatter instead of sinking.
const MIN_SEPARATION_SPEED: f64 = 1e-3;
/// Relative squared-distance slack under which two bodies count as touching.
const TOUCH_TOL: f64 = 1e-9;
const MAX_EVENTS: usize = 200_000;
const PAIR_SCAN_STEPS: usize = 64;
const PAIR_SCAN_OCTAVES: usize = 40;

/// Recorded in dataset provenance.
pub const FRICTION_MODEL: &str = "bounce: v_t *= clamp(1 - mu * |dv_n| / |v_t|, 0, 1); resting: kinetic deceleration mu * g";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Airborne,
    /// On the ground; horizontal motion decelerates under kinetic friction.
    Resting,
}

/// Constant-acceleration piece starting at `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub p0: Vec3,
    pub v0: Vec3,
    pub accel: Vec3,
    pub mode: Mode,
}

impl Segment {
    #[inline]
    pub fn position(&self, t: f64) -> Vec3 {
        let dt = t - self.t0;
        self.p0 + self.v0 * dt + self.accel * (0.5 * dt * dt)
    }

    #[inline]
    pub fn velocity(&self, t: f64) -> Vec3 {
        self.v0 + self.accel * (t - self.t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub time: f64,
    pub object: usize,
    /// `None` for the ground.
    pub other: Option<usize>,
    pub velocity_before: Vec3,
    pub velocity_after: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub in_contact: bool,
}

/// Exact simulated trajectory, sampled at the scene's frame times.
#[derive(Debug, Clone)]
pub struct SceneTrace {
    pub spec: SceneSpec,
    pub timestamps: Vec<f64>,
    /// `states[frame][object]`.
    pub states: Vec<Vec<ObjectState>>,
    /// Time-ordered pieces per object.
    pub segments: Vec<Vec<Segment>>,
    pub contacts: Vec<ContactEvent>,
}

impl SceneTrace {
    pub fn frame_count(&self) -> usize {
        self.timestamps.len()
    }

    pub fn position(&self, frame: usize, object: usize) -> Vec3 {
        self.states[frame][object].position
    }

    /// Segment active at continuous time `t`.
    pub fn segment_at(&self, object: usize, t: f64) -> &Segment {
        let segs = &self.segments[object];
        let k = segs.partition_point(|s| s.t0 <= t);
        &segs[k.saturating_sub(1)]
    }

    pub fn position_at(&self, object: usize, t: f64) -> Vec3 {
        self.segment_at(object, t).position(t)
    }
}

struct Body {
    seg: Segment,
    half_height: f64,
    radius: f64,
    mass: f64,
    restitution: f64,
    friction: f64,
}

/// Smallest τ ≥ 0 with `y0 + vy τ − ½ g τ² = c`, given `y0 ≥ c` up to rounding.
fn ground_contact_delay(y0: f64, vy: f64, g: f64, c: f64) -> Option<f64> {
    let gap = (y0 - c).max(0.0);
    if g == 0.0 {
        return (vy < 0.0).then(|| gap / -vy);
    }
    let root = (vy * vy + 2.0 * g * gap).sqrt();
    Some(if vy < 0.0 {
        // avoids cancellation in (vy + root) / g
        2.0 * gap / (root - vy)
    } else {
        (vy + root) / g
    })
}

/// Earliest τ in [0, horizon] where two bodies touch while closing in.
///
/// Bodies already in contact report τ = 0 when their gap is shrinking (by
/// velocity, or by acceleration at zero relative speed).
fn pair_contact_delay(a: &Segment, b: &Segment, t: f64, reach: f64, horizon: f64) -> Option<f64> {
    let dp = b.position(t) - a.position(t);
    let dv = b.velocity(t) - a.velocity(t);
    let da = b.accel - a.accel;
    let mut f0 = dp.norm_squared() - reach * reach;
    let touching = f0 <= TOUCH_TOL * reach * reach;
    if touching {
        f0 = f0.min(0.0);
    }
    // gap polynomial expanded around τ = 0 so small-τ increments do not cancel against |dp|²
    let c = [2.0 * dp.dot(&dv), dv.norm_squared() + dp.dot(&da), dv.dot(&da), 0.25 * da.norm_squared()];
    let f = |tau: f64| f0 + tau * (c[0] + tau * (c[1] + tau * (c[2] + tau * c[3])));
    if touching {
        let rate = dp.dot(&dv);
        if rate < 0.0 || (rate == 0.0 && dv.norm_squared() + dp.dot(&da) < 0.0) {
            return Some(0.0);
        }
    }
    if da == Vec3::zeros() {
        let qa = dv.norm_squared();
        let qb = dp.dot(&dv);
        if f0 <= 0.0 || qa == 0.0 || qb >= 0.0 {
            return None;
        }
        let disc = qb * qb - qa * f0;
        if disc < 0.0 {
            return None;
        }
        // first root of qa τ² + 2 qb τ + f0, written without cancellation
        let tau = f0 / (-qb + disc.sqrt());
        return (tau <= horizon).then_some(tau);
    }
    if horizon <= 0.0 {
        return None;
    }
    // geometric samples near 0 catch quick returns after a contact, then a uniform scan
    let step = horizon / PAIR_SCAN_STEPS as f64;
    let near = (1..=PAIR_SCAN_OCTAVES).rev().map(|k| step * 0.5f64.powi(k as i32));
    let far = (1..=PAIR_SCAN_STEPS).map(|k| step * k as f64);
    let mut lo = 0.0;
    let mut flo = f0;
    for hi in near.chain(far) {
        let fhi = f(hi);
        if flo > 0.0 && fhi <= 0.0 {
            let (mut a_, mut b_) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a_ + b_);
                if m <= a_ || m >= b_ {
                    break;
                }
                if f(m) > 0.0 {
                    a_ = m;
                } else {
                    b_ = m;
                }
            }
            return Some(b_);
        }
        lo = hi;
        flo = fhi;
    }
    None
}

enum Event {
    Ground(usize),
    Stop(usize),
    Pair(usize, usize),
}

fn resting_segment(t: f64, p: Vec3, v: Vec3, friction: f64, g: f64) -> Segment {
    let vh = Vec3::new(v.x, 0.0, v.z);
    let speed = vh.norm();
    let accel = if speed > 0.0 && friction * g > 0.0 {
        vh * (-friction * g / speed)
    } else {
        Vec3::zeros()
    };
    Segment {
        t0: t,
        p0: p,
        v0: vh,
        accel,
        mode: Mode::Resting,
    }
}

/// Simulate the scene and sample it at every frame time.
pub fn simulate(spec: &SceneSpec) -> Result<SceneTrace> {
    spec.validate()?;
    let g = spec.gravity;
    let gravity = Vec3::new(0.0, -g, 0.0);
    let frames = spec.frame_count();
    let t_end = spec.frame_time(frames - 1);

    let mut bodies: Vec<Body> = spec
        .objects
        .iter()
        .map(|o| {
            let mut p0 = Vec3::from(o.position);
            let floor = spec.ground_height + o.shape.half_height();
            if p0.y < floor {
                p0.y = floor;
            }
            Body {
                seg: Segment {
                    t0: 0.0,
                    p0,
                    v0: Vec3::from(o.velocity),
                    accel: gravity,
                    mode: Mode::Airborne,
                },
                half_height: o.shape.half_height(),
                radius: o.shape.bounding_radius(),
                mass: o.mass(),
                restitution: o.restitution,
                friction: o.friction,
            }
        })
        .collect();
    let mut segments: Vec<Vec<Segment>> = bodies.iter().map(|b| vec![b.seg]).collect();
    let mut contacts = Vec::new();

    let mut t = 0.0;
    for _ in 0..MAX_EVENTS {
        let mut next: Option<(f64, Event)> = None;
        let consider = |time: f64, ev: Event, next: &mut Option<(f64, Event)>| {
            if time <= t_end && next.as_ref().is_none_or(|(best, _)| time < *best) {
                *next = Some((time, ev));
            }
        };
        for (i, b) in bodies.iter().enumerate() {
            match b.seg.mode {
                Mode::Airborne => {
                    let c = spec.ground_height + b.half_height;
                    if let Some(tau) = ground_contact_delay(b.seg.p0.y, b.seg.v0.y, g, c) {
                        consider((b.seg.t0 + tau).max(t), Event::Ground(i), &mut next);
                    }
                }
                Mode::Resting => {
                    let a = b.seg.accel.norm();
                    if a > 0.0 {
                        consider(b.seg.t0 + b.seg.v0.norm() / a, Event::Stop(i), &mut next);
                    }
                }
            }
        }
        let horizon = next.as_ref().map_or(t_end, |(tn, _)| *tn) - t;
        for i in 0..bodies.len() {
            for j in i + 1..bodies.len() {
                let reach = bodies[i].radius + bodies[j].radius;
                if let Some(tau) = pair_contact_delay(&bodies[i].seg, &bodies[j].seg, t, reach, horizon) {
                    consider(t + tau, Event::Pair(i, j), &mut next);
                }
            }
        }

        let Some((tn, event)) = next else {
            return Ok(sample(spec, segments, contacts));
        };
        t = tn;
        match event {
            Event::Ground(i) => {
                let b = &mut bodies[i];
                let mut p = b.seg.position(t);
                p.y = spec.ground_height + b.half_height;
                let v_in = b.seg.velocity(t);
                let vy_out = -b.restitution * v_in.y.min(0.0);
                let mut vh = Vec3::new(v_in.x, 0.0, v_in.z);
                let speed = vh.norm();
                if speed > 0.0 {
                    let dvn = (1.0 + b.restitution) * v_in.y.min(0.0).abs();
                    vh *= (1.0 - b.friction * dvn / speed).clamp(0.0, 1.0);
                }
                let settles = if g > 0.0 {
                    vy_out * vy_out / (2.0 * g) < REST_APEX_M
                } else {
                    vy_out == 0.0
                };
                b.seg = if settles {
                    resting_segment(t, p, vh, b.friction, g)
                } else {
                    Segment {
                        t0: t,
                        p0: p,
                        v0: vh + Vec3::new(0.0, vy_out, 0.0),
                        accel: gravity,
                        mode: Mode::Airborne,
                    }
                };
                contacts.push(ContactEvent {
                    time: t,
                    object: i,
                    other: None,
                    velocity_before: v_in,
                    velocity_after: b.seg.v0,
                });
                segments[i].push(b.seg);
            }
            Event::Stop(i) => {
                let b = &mut bodies[i];
                let p = b.seg.position(t);
                b.seg = Segment {
                    t0: t,
                    p0: p,
                    v0: Vec3::zeros(),
                    accel: Vec3::zeros(),
                    mode: Mode::Resting,
                };
                segments[i].push(b.seg);
            }
            Event::Pair(i, j) => {
                let (pa, pb) = (bodies[i].seg.position(t), bodies[j].seg.position(t));
                let (va, vb) = (bodies[i].seg.velocity(t), bodies[j].seg.velocity(t));
                let n = (pb - pa).normalize();
                let approach = (vb - va).dot(&n);
                let e = (bodies[i].restitution * bodies[j].restitution).sqrt();
                let target = (-e * approach).max(MIN_SEPARATION_SPEED);
                if approach >= target {
                    continue;
                }
                // a resting body pushed toward the ground only takes the horizontal part of the impulse
                let share = |b: &Body, dir: Vec3| {
                    let pinned = b.seg.mode == Mode::Resting && dir.y < 0.0;
                    let d = if pinned { Vec3::new(dir.x, 0.0, dir.z) } else { dir };
                    (d / b.mass, d.dot(&dir) / b.mass)
                };
                let ((da, wa), (db, wb)) = (share(&bodies[i], -n), share(&bodies[j], n));
                if wa + wb <= 0.0 {
                    continue;
                }
                let jn = (target - approach) / (wa + wb);
                let new_v = [va + da * jn, vb + db * jn];
                for (k, (idx, p, v_before)) in [(i, pa, va), (j, pb, vb)].into_iter().enumerate() {
                    let b = &mut bodies[idx];
                    let v = new_v[k];
                    b.seg = match b.seg.mode {
                        Mode::Resting if v.y <= 0.0 => resting_segment(t, p, v, b.friction, g),
                        _ => Segment {
                            t0: t,
                            p0: p,
                            v0: v,
                            accel: gravity,
                            mode: Mode::Airborne,
                        },
                    };
                    contacts.push(ContactEvent {
                        time: t,
                        object: idx,
                        other: Some(if idx == i { j } else { i }),
                        velocity_before: v_before,
                        velocity_after: b.seg.v0,
                    });
                    segments[idx].push(b.seg);
                }
            }
        }
    }
    Err(Error::Simulation(format!("exceeded {MAX_EVENTS} contact events")))
}

fn sample(spec: &SceneSpec, segments: Vec<Vec<Segment>>, contacts: Vec<ContactEvent>) -> SceneTrace {
    let frames = spec.frame_count();
    let timestamps: Vec<f64> = (0..frames).map(|k| spec.frame_time(k)).collect();
    let states = timestamps
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let prev = if k == 0 { f64::NEG_INFINITY } else { timestamps[k - 1] };
            segments
                .iter()
                .enumerate()
                .map(|(i, segs)| {
                    let s = &segs[segs.partition_point(|s| s.t0 <= t).saturating_sub(1)];
                    let touched = contacts.iter().any(|c| c.object == i && c.time > prev && c.time <= t);
                    ObjectState {
                        position: s.position(t),
                        velocity: s.velocity(t),
                        in_contact: touched || s.mode == Mode::Resting,
                    }
                })
                .collect()
        })
        .collect();
    SceneTrace {
        spec: spec.clone(),
        timestamps,
        states,
        segments,
        contacts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::scene::{randomize_scene, Lighting, ObjectSpec, Shape};

    pub(crate) fn drop_spec(height: f64, g: f64, e: f64, friction: f64) -> SceneSpec {
        let r = 0.1;
        SceneSpec {
            objects: vec![ObjectSpec {
                shape: Shape::Sphere { radius: r },
                position: [0.0, r + height, 0.0],
                velocity: [0.0, 0.0, 0.0],
                density: 1000.0,
                restitution: e,
                friction,
                albedo: [0.8, 0.2, 0.2],
            }],
            gravity: g,
            ground_height: 0.0,
            duration: 2.0,
            fps: 100.0,
            rng_seed: 0,
            complexity: None,
            perturbation_ratio: 0.0,
            lighting: Lighting::default(),
        }
    }

    #[test]
    fn drop_impact_and_apex() {
        let trace = simulate(&drop_spec(1.0, 10.0, 0.5, 0.0)).unwrap();
        let first = trace.contacts[0];
        assert!((first.time - (0.2f64).sqrt()).abs() < 1e-12);
        let apex_t = first.time + first.velocity_after.y / 10.0;
        let apex = trace.position_at(0, apex_t).y - 0.1;
        assert!((apex - 0.25).abs() < 1e-12, "apex {apex}");
    }

    #[test]
    fn restitution_scales_energy() {
        let trace = simulate(&drop_spec(0.7, 9.0, 0.6, 0.3)).unwrap();
        let c = trace.contacts[0];
        let before = c.velocity_before.norm_squared();
        let after = c.velocity_after.norm_squared();
        assert!((after - 0.36 * before).abs() < 1e-9 * before);
    }

    #[test]
    fn weightless_and_still_is_static() {
        let mut spec = drop_spec(0.5, 0.0, 0.5, 0.5);
        spec.gravity = 0.0;
        let trace = simulate(&spec).unwrap();
        let p0 = trace.position(0, 0);
        assert!(trace.states.iter().all(|s| s[0].position == p0));
        assert!(trace.contacts.is_empty());
    }

    #[test]
    fn resting_object_stays_put() {
        let mut spec = drop_spec(0.0, 9.81, 0.5, 0.5);
        spec.objects[0].position[1] = 0.1;
        let trace = simulate(&spec).unwrap();
        assert!(trace.states.iter().all(|s| s[0].position == Vec3::new(0.0, 0.1, 0.0)));
    }

    #[test]
    fn below_ground_rejected() {
        let mut spec = drop_spec(1.0, 10.0, 0.5, 0.0);
        spec.objects[0].position[1] = 0.05;
        assert!(matches!(simulate(&spec), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn ballistic_between_contacts() {
        let mut spec = drop_spec(0.8, 12.0, 0.5, 0.0);
        spec.objects[0].velocity = [0.3, 1.0, -0.2];
        let trace = simulate(&spec).unwrap();
        let first = trace.contacts[0].time;
        let x0 = Vec3::from(spec.objects[0].position);
        let v0 = Vec3::from(spec.objects[0].velocity);
        for (k, &t) in trace.timestamps.iter().enumerate().take_while(|(_, &t)| t < first) {
            let expect = x0 + v0 * t - Vec3::new(0.0, 6.0 * t * t, 0.0);
            assert!((trace.position(k, 0) - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn sliding_comes_to_rest() {
        let mut spec = drop_spec(0.0, 10.0, 0.5, 0.5);
        spec.objects[0].position[1] = 0.1;
        spec.objects[0].velocity = [1.0, 0.0, 0.0];
        let trace = simulate(&spec).unwrap();
        // decelerates at μg = 5 m/s² and stops after 0.2 s having covered 0.1 m
        let last = trace.states.last().unwrap()[0];
        assert!((last.position.x - 0.1).abs() < 1e-12);
        assert_eq!(last.velocity, Vec3::zeros());
    }

    #[test]
    fn head_on_spheres_exchange_momentum() {
        let mut spec = drop_spec(0.0, 0.0, 1.0, 0.0);
        spec.objects[0].position = [-0.5, 0.5, 0.0];
        spec.objects[0].velocity = [1.0, 0.0, 0.0];
        let mut other = spec.objects[0];
        other.position = [0.5, 0.5, 0.0];
        other.velocity = [-1.0, 0.0, 0.0];
        spec.objects.push(other);
        let trace = simulate(&spec).unwrap();
        let c = trace.contacts[0];
        assert!((c.time - 0.4).abs() < 1e-12);
        let last = trace.states.last().unwrap();
        assert!((last[0].velocity.x + 1.0).abs() < 1e-12);
        assert!((last[1].velocity.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn randomized_scenes_never_penetrate() {
        for seed in 0..100 {
            let spec = randomize_scene(None, seed);
            let trace = simulate(&spec).unwrap();
            for s in &trace.states {
                for (o, st) in spec.objects.iter().zip(s) {
                    assert!(st.position.y - o.shape.half_height() >= -1e-9);
                }
            }
        }
    }
}
