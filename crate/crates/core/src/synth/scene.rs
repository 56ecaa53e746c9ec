//! Parametric rigid-body scene description and its randomizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Physical parameter ranges used by [`randomize_scene`].
pub mod ranges {
    pub const RESTITUTION: (f64, f64) = (0.1, 0.95);
    pub const GRAVITY: (f64, f64) = (5.0, 15.0);
    pub const DENSITY: (f64, f64) = (100.0, 10_000.0);
    pub const FRICTION: (f64, f64) = (0.1, 1.0);
    pub const LIGHT_LUX: (f64, f64) = (100.0, 100_000.0);
    pub const PERTURBATION: (f64, f64) = (0.05, 0.25);
    /// Full scale range; desk scenes draw from [`DESK_SCALE`] inside it.
    pub const SCALE: (f64, f64) = (0.1, 5.0);
    pub const DESK_SCALE: (f64, f64) = (0.1, 0.4);
    pub const ASPECT: (f64, f64) = (0.6, 1.4);
    pub const ALBEDO: (f64, f64) = (0.0, 1.0);
}

/// Curriculum mix: single 30 %, two-body 35 %, multi-object 35 %.
pub const COMPLEXITY_MIX: [(Complexity, f64); 3] = [
    (Complexity::Single, 0.30),
    (Complexity::TwoBody, 0.35),
    (Complexity::Multi, 0.35),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Complexity {
    Single,
    TwoBody,
    Multi,
}

impl Complexity {
    fn sample(rng: &mut impl Rng) -> Self {
        let x: f64 = rng.random();
        let mut acc = 0.0;
        for (c, p) in COMPLEXITY_MIX {
            acc += p;
            if x < acc {
                return c;
            }
        }
        Complexity::Multi
    }

    fn object_count(self, rng: &mut impl Rng) -> usize {
        match self {
            Complexity::Single => 1,
            Complexity::TwoBody => 2,
            Complexity::Multi => rng.random_range(3..=6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere { radius: f64 },
    /// Axis-aligned in world; boxes translate without rotating.
    Box { half_extents: [f64; 3] },
}

impl Shape {
    /// Distance from center to the lowest point.
    pub fn half_height(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Box { half_extents } => half_extents[1],
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Box { half_extents: h } => (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt(),
        }
    }

    /// Characteristic size: sphere diameter or longest box edge, meters.
    pub fn size(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => 2.0 * radius,
            Shape::Box { half_extents: h } => 2.0 * h[0].max(h[1]).max(h[2]),
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
            Shape::Box { half_extents: h } => 8.0 * h[0] * h[1] * h[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub density: f64,
    pub restitution: f64,
    pub friction: f64,
    pub albedo: [f64; 3],
}

impl ObjectSpec {
    pub fn mass(&self) -> f64 {
        self.density * self.shape.volume()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lighting {
    /// Unit vector pointing toward the light.
    pub direction: [f64; 3],
    pub intensity_lux: f64,
}

impl Default for Lighting {
    fn default() -> Self {
        let d = Vec3::new(0.4, 1.0, -0.3).normalize();
        Self {
            direction: [d.x, d.y, d.z],
            intensity_lux: 10_000.0,
        }
    }
}

/// World frame: y up, gravity along −y, ground plane at `ground_height`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub objects: Vec<ObjectSpec>,
    pub gravity: f64,
    pub ground_height: f64,
    pub duration: f64,
    pub fps: f64,
    pub rng_seed: u64,
    pub complexity: Option<Complexity>,
    pub perturbation_ratio: f64,
    pub lighting: Lighting,
}

impl SceneSpec {
    /// Frames sampled at `k / fps` for `k < round(duration · fps)`.
    pub fn frame_count(&self) -> usize {
        (self.duration * self.fps).round() as usize
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 / self.fps
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::invalid(format!("fps must be > 0, got {}", self.fps)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid(format!("duration must be > 0, got {}", self.duration)));
        }
        if self.frame_count() < 2 {
            return Err(Error::invalid("scene must span at least two frames"));
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(Error::invalid(format!("gravity must be ≥ 0, got {}", self.gravity)));
        }
        for (i, o) in self.objects.iter().enumerate() {
            let dims_ok = match o.shape {
                Shape::Sphere { radius } => radius > 0.0,
                Shape::Box { half_extents } => half_extents.iter().all(|&h| h > 0.0),
            };
            if !dims_ok {
                return Err(Error::invalid(format!("object {i} has non-positive dimensions")));
            }
            if !(o.density > 0.0 && (0.0..=1.0).contains(&o.restitution) && o.friction >= 0.0) {
                return Err(Error::invalid(format!("object {i} has invalid material parameters")));
            }
            let bottom = o.position[1] - o.shape.half_height();
            if bottom < self.ground_height - 1e-9 {
                return Err(Error::invalid(format!(
                    "object {i} starts below the ground (bottom {bottom} < {})",
                    self.ground_height
                )));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..=hi)
}

/// Draw a desk-scale scene. With `complexity = None` the class is drawn from
/// the curriculum mix. Deterministic in `seed`.
pub fn randomize_scene(complexity: Option<Complexity>, seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let complexity = complexity.unwrap_or_else(|| Complexity::sample(&mut rng));
    let n = complexity.object_count(&mut rng);
    let gravity = uniform(&mut rng, ranges::GRAVITY);
    let perturbation = uniform(&mut rng, ranges::PERTURBATION);

    let mut objects: Vec<ObjectSpec> = Vec::with_capacity(n);
    while objects.len() < n {
        let scale = uniform(&mut rng, ranges::DESK_SCALE);
        let shape = if rng.random_bool(0.5) {
            Shape::Sphere { radius: scale / 2.0 }
        } else {
            let mut h = [0.0; 3];
            for x in &mut h {
                *x = (scale * uniform(&mut rng, ranges::ASPECT)).clamp(ranges::SCALE.0, scale) / 2.0;
            }
            Shape::Box { half_extents: h }
        };
        let position = [
            rng.random_range(-0.5..=0.5),
            shape.half_height() + rng.random_range(0.2..=0.9),
            rng.random_range(-0.5..=0.5),
        ];
        // base launch velocity, perturbed by up to ±perturbation
        let base = [rng.random_range(-0.3..=0.3), rng.random_range(-0.3..=0.8), rng.random_range(-0.3..=0.3)];
        let velocity = base.map(|b| b * (1.0 + rng.random_range(-perturbation..=perturbation)));
        let candidate = ObjectSpec {
            shape,
            position,
            velocity,
            density: uniform(&mut rng, ranges::DENSITY),
            restitution: uniform(&mut rng, ranges::RESTITUTION),
            friction: uniform(&mut rng, ranges::FRICTION),
            albedo: [
                uniform(&mut rng, ranges::ALBEDO),
                uniform(&mut rng, ranges::ALBEDO),
                uniform(&mut rng, ranges::ALBEDO),
            ],
        };
        let overlaps = objects.iter().any(|o| {
            let d = Vec3::from(o.position) - Vec3::from(candidate.position);
            d.norm() <= o.shape.bounding_radius() + candidate.shape.bounding_radius() + 0.01
        });
        if !overlaps {
            objects.push(candidate);
        }
    }

    let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
    let elevation: f64 = rng.random_range(0.5..1.3);
    let dir = Vec3::new(azimuth.cos() * elevation.cos(), elevation.sin(), azimuth.sin() * elevation.cos());
    SceneSpec {
        objects,
        gravity,
        ground_height: 0.0,
        duration: 1.0,
        fps: 24.0,
        rng_seed: seed,
        complexity: Some(complexity),
        perturbation_ratio: perturbation,
        lighting: Lighting {
            direction: [dir.x, dir.y, dir.z],
            intensity_lux: uniform(&mut rng, ranges::LIGHT_LUX),
        },
    }
}
