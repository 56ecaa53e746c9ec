//! Spatio-temporal point distance, symmetric 4D Chamfer distance and the
//! negative-Chamfer reward.
//!
//! The squared 4D distance is plain squared Euclidean distance once a point
//! is embedded as `(x, y, z, α·τ)`, so the indexed path answers nearest
//! neighbour queries with a 4D k-d tree and re-evaluates the matched pair
//! with [`dist4d`] so that both paths report the same per-pair value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point4D, PointSet4D};
use crate::kdtree::KdTree4;

/// Temporal weight in meters per frame.
pub const DEFAULT_ALPHA: f64 = 0.03;
/// Per-set point budget applied before Chamfer evaluation.
pub const DEFAULT_POINT_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acceleration {
    Brute,
    Indexed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamferConfig {
    pub alpha: f64,
    pub acceleration: Acceleration,
}

impl Default for ChamferConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            acceleration: Acceleration::Indexed,
        }
    }
}

impl ChamferConfig {
    pub fn new(alpha: f64, acceleration: Acceleration) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and > 0, got {alpha}")));
        }
        Ok(Self { alpha, acceleration })
    }
}

/// `‖xyz − x′y′z′‖² + α²(τ − τ′)²`, in m².
#[inline]
pub fn dist4d(p: &Point4D, q: &Point4D, alpha: f64) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    let dt = p.tau as f64 - q.tau as f64;
    dx * dx + dy * dy + dz * dz + alpha * alpha * dt * dt
}

/// Mean over `from` of the distance to its nearest point in `to`.
fn directed_brute(from: &[Point4D], to: &[Point4D], alpha: f64) -> f64 {
    let mins: Vec<f64> = from
        .par_iter()
        .map(|p| to.iter().map(|q| dist4d(p, q, alpha)).fold(f64::INFINITY, f64::min))
        .collect();
    mean(&mins)
}

fn directed_indexed(from: &[Point4D], to: &[Point4D], alpha: f64) -> f64 {
    let tree = KdTree4::build(to.iter().map(|q| q.embed(alpha)).collect());
    let mins: Vec<f64> = from
        .par_iter()
        .map(|p| {
            let (j, _) = tree.nearest(&p.embed(alpha)).expect("non-empty target");
            dist4d(p, &to[j], alpha)
        })
        .collect();
    mean(&mins)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Symmetric 4D Chamfer distance (squared form), in m².
pub fn chamfer4d(gen: &PointSet4D, gt: &PointSet4D, cfg: &ChamferConfig) -> Result<f64> {
    if gen.is_empty() || gt.is_empty() {
        return Err(Error::EmptySet(format!(
            "chamfer operands must be non-empty (|gen| = {}, |gt| = {})",
            gen.len(),
            gt.len()
        )));
    }
    let alpha = cfg.alpha;
    let (a, b) = (&gen.points[..], &gt.points[..]);
    Ok(match cfg.acceleration {
        Acceleration::Brute => directed_brute(a, b, alpha) + directed_brute(b, a, alpha),
        Acceleration::Indexed => directed_indexed(a, b, alpha) + directed_indexed(b, a, alpha),
    })
}

/// Negative Chamfer distance; zero only when the two sets coincide.
pub fn reward(gen: &PointSet4D, gt: &PointSet4D, cfg: &ChamferConfig) -> Result<f64> {
    Ok(-chamfer4d(gen, gt, cfg)?)
}

/// Uniform subsample to at most `budget` points, preserving input order.
pub fn subsample(set: &PointSet4D, budget: usize, seed: u64) -> PointSet4D {
    if set.len() <= budget {
        return set.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, set.len(), budget).into_vec();
    idx.sort_unstable();
    PointSet4D {
        points: idx.into_iter().map(|i| set.points[i]).collect(),
        alpha: set.alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn set(points: Vec<Point4D>) -> PointSet4D {
        PointSet4D::new(points, DEFAULT_ALPHA).unwrap()
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize) -> PointSet4D {
        set((0..n)
            .map(|_| {
                Point4D::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.5..3.0),
                    rng.random_range(0..8),
                )
            })
            .collect())
    }

    #[test]
    fn dist4d_examples() {
        let p = Point4D::new(0.1, 0.2, 0.3, 4);
        assert_eq!(dist4d(&p, &p, 0.03), 0.0);
        let q = Point4D::new(0.1, 0.2, 0.3, 5);
        assert!((dist4d(&p, &q, 0.03) - 9e-4).abs() < 1e-18);
        let o = Point4D::new(0.0, 0.0, 0.0, 0);
        let r = Point4D::new(3e-2, 0.0, 0.0, 1);
        assert!((dist4d(&o, &r, 0.03) - 1.8e-3).abs() < 1e-18);
    }

    #[test]
    fn chamfer_examples() {
        let cfg = ChamferConfig::default();
        let a = set(vec![Point4D::new(0.0, 0.0, 0.0, 0)]);
        let b = set(vec![Point4D::new(1.0, 0.0, 0.0, 0)]);
        assert_eq!(chamfer4d(&a, &a, &cfg).unwrap(), 0.0);
        assert_eq!(chamfer4d(&a, &b, &cfg).unwrap(), 2.0);
        assert_eq!(reward(&a, &b, &cfg).unwrap(), -2.0);
        let empty = set(vec![]);
        assert!(matches!(chamfer4d(&a, &empty, &cfg), Err(Error::EmptySet(_))));
        assert!(ChamferConfig::new(0.0, Acceleration::Brute).is_err());
    }

    #[test]
    fn indexed_matches_brute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_set(&mut rng, 200);
            let b = random_set(&mut rng, 200);
            let fast = chamfer4d(&a, &b, &ChamferConfig::new(0.03, Acceleration::Indexed).unwrap()).unwrap();
            let slow = chamfer4d(&a, &b, &ChamferConfig::new(0.03, Acceleration::Brute).unwrap()).unwrap();
            assert!((fast - slow).abs() <= 1e-9 * slow.abs());
        }
    }

    #[test]
    fn perturbation_decreases_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gt = random_set(&mut rng, 100);
        let cfg = ChamferConfig::default();
        assert_eq!(reward(&gt, &gt, &cfg).unwrap(), 0.0);
        for i in [0, 17, 99] {
            let mut gen = gt.clone();
            gen.points[i].x += 0.05;
            assert!(reward(&gen, &gt, &cfg).unwrap() < 0.0);
        }
    }

    #[test]
    fn subsample_is_seeded_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_set(&mut rng, 1000);
        let a = subsample(&s, 100, 42);
        let b = subsample(&s, 100, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        assert_eq!(subsample(&s, 5000, 42), s);
    }
}
