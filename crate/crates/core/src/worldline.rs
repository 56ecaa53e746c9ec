//! Worldlines: seed pixels tracked through ground-truth flow, lifted to 3D
//! with a predicted and a reference depth sequence, and the trajectory
//! metrics built on them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unproject_unchecked, CameraIntrinsics, DepthMap, FlowField, Vec3};
use crate::raster::{bilinear_taps, ensure_same_shape, sample_valid_taps, Mask};

pub const DEFAULT_FAIL_TAU_M: f64 = 0.1;
pub const DEFAULT_NUM_SEEDS: usize = 2048;
pub const DEFAULT_SEED: u64 = 42;

/// One tracked seed. Frames `0..valid_len` are valid; a broken track never resumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Worldline {
    pub seed_pixel: [usize; 2],
    pub horizon: usize,
    pub positions_2d: Vec<[f64; 2]>,
    pub positions_3d_pred: Vec<Vec3>,
    pub positions_3d_gt: Vec<Vec3>,
    pub valid_len: usize,
}

impl Worldline {
    pub fn is_valid(&self, t: usize) -> bool {
        t < self.valid_len
    }

    pub fn valid(&self) -> Vec<bool> {
        (0..self.horizon).map(|t| self.is_valid(t)).collect()
    }

    /// ‖pred − gt‖ at each valid frame.
    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions_3d_pred
            .iter()
            .zip(&self.positions_3d_gt)
            .take(self.valid_len)
            .map(|(p, g)| (p - g).norm())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldlineMetrics {
    pub l2_error: f64,
    pub mean_drift: f64,
    /// `None` when no worldline survives to the last frame.
    pub final_drift: Option<f64>,
    pub fail_rate: f64,
    pub traj_length_frames: f64,
    pub traj_length_pct: f64,
    pub drift_curve: Vec<Option<f64>>,
    pub num_worldlines: usize,
}

/// Up to `n` distinct true pixels of `mask`, uniformly without replacement,
/// returned in row-major order.
pub fn sample_seeds(mask: &Mask, n: usize, seed: u64) -> Result<Vec<[usize; 2]>> {
    let candidates: Vec<[usize; 2]> = mask.enumerate().filter(|(_, _, &b)| b).map(|(u, v, _)| [u, v]).collect();
    if candidates.is_empty() {
        return Err(Error::invalid("seed mask has no true pixels"));
    }
    if n >= candidates.len() {
        return Ok(candidates);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, candidates.len(), n).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| candidates[i]).collect())
}

fn sample_flow(flow: &FlowField, x: f64, y: f64) -> Option<(f64, f64)> {
    let (w, h) = flow.shape();
    let taps = bilinear_taps(x, y, w, h)?;
    let du = sample_valid_taps(flow.du.as_slice(), flow.valid.as_slice(), &taps)?;
    let dv = sample_valid_taps(flow.dv.as_slice(), flow.valid.as_slice(), &taps)?;
    Some((du, dv))
}

fn sample_depth(depth: &DepthMap, x: f64, y: f64) -> Option<f64> {
    let (w, h) = depth.shape();
    let taps = bilinear_taps(x, y, w, h)?;
    sample_valid_taps(depth.values.as_slice(), depth.valid.as_slice(), &taps)
}

/// Advance each seed through `flows` (`flows[t]` maps frame t to t+1).
pub fn track_2d(seeds: &[[usize; 2]], flows: &[FlowField]) -> Result<Vec<Worldline>> {
    let Some(first) = flows.first() else {
        return Err(Error::invalid("at least one flow field is required"));
    };
    let shape = first.shape();
    for f in flows {
        ensure_same_shape(shape, f.shape())?;
    }
    if let Some(s) = seeds.iter().find(|s| s[0] >= shape.0 || s[1] >= shape.1) {
        return Err(Error::invalid(format!("seed {s:?} outside {}×{} raster", shape.0, shape.1)));
    }
    let horizon = flows.len() + 1;
    Ok(seeds
        .par_iter()
        .map(|&seed| {
            let mut pos = vec![[seed[0] as f64, seed[1] as f64]];
            for flow in flows {
                let [x, y] = *pos.last().unwrap();
                let Some((du, dv)) = sample_flow(flow, x, y) else { break };
                let (nx, ny) = (x + du, y + dv);
                if !(nx >= 0.0 && ny >= 0.0 && nx <= (shape.0 - 1) as f64 && ny <= (shape.1 - 1) as f64) {
                    break;
                }
                pos.push([nx, ny]);
            }
            Worldline {
                seed_pixel: seed,
                horizon,
                valid_len: pos.len(),
                positions_2d: pos,
                positions_3d_pred: Vec::new(),
                positions_3d_gt: Vec::new(),
            }
        })
        .collect())
}

/// Unproject the valid 2D prefix at bilinearly sampled depth, stopping at the
/// first frame without a valid depth footprint.
pub fn lift_positions(positions_2d: &[[f64; 2]], depths: &[DepthMap], k: &CameraIntrinsics) -> Vec<Vec3> {
    positions_2d
        .iter()
        .zip(depths)
        .map_while(|(&[x, y], d)| sample_depth(d, x, y).map(|z| unproject_unchecked(x, y, z, k)))
        .collect()
}

/// Attach predicted and reference 3D positions; validity becomes the common prefix.
pub fn lift_3d(
    tracks: Vec<Worldline>,
    depths_pred: &[DepthMap],
    depths_gt: &[DepthMap],
    k: &CameraIntrinsics,
) -> Result<Vec<Worldline>> {
    for d in depths_pred.iter().chain(depths_gt) {
        ensure_same_shape(k.shape(), d.shape())?;
    }
    if let Some(t) = tracks.first() {
        if depths_pred.len() < t.horizon || depths_gt.len() < t.horizon {
            return Err(Error::invalid(format!(
                "depth sequences ({} pred, {} gt) shorter than the {} frame horizon",
                depths_pred.len(),
                depths_gt.len(),
                t.horizon
            )));
        }
    }
    Ok(tracks
        .into_par_iter()
        .map(|mut wl| {
            let n = wl.valid_len.min(wl.positions_2d.len());
            let mut pred = lift_positions(&wl.positions_2d[..n], depths_pred, k);
            let mut gt = lift_positions(&wl.positions_2d[..n], depths_gt, k);
            let len = pred.len().min(gt.len());
            pred.truncate(len);
            gt.truncate(len);
            wl.valid_len = len;
            wl.positions_3d_pred = pred;
            wl.positions_3d_gt = gt;
            wl
        })
        .collect())
}

/// Reduce lifted worldlines to the trajectory metrics.
///
/// A worldline fails when its error exceeds `fail_tau` at any valid frame or
/// when it breaks before the last frame.
pub fn worldline_metrics(worldlines: &[Worldline], fail_tau: f64) -> Result<WorldlineMetrics> {
    if !(fail_tau >= 0.0) {
        return Err(Error::invalid(format!("fail_tau must be ≥ 0, got {fail_tau}")));
    }
    let horizon = worldlines.iter().map(|w| w.horizon).max().unwrap_or(0);
    let per_line: Vec<Vec<f64>> = worldlines.iter().map(|w| w.errors().collect()).collect();
    let lived: Vec<&Vec<f64>> = per_line.iter().filter(|e| !e.is_empty()).collect();
    if lived.is_empty() {
        return Err(Error::EmptySet("no worldline has a valid frame".into()));
    }
    let l2_error = lived.iter().map(|e| e.iter().sum::<f64>() / e.len() as f64).sum::<f64>() / lived.len() as f64;

    let drift_curve: Vec<Option<f64>> = (0..horizon)
        .map(|t| {
            let (s, n) = per_line
                .iter()
                .filter_map(|e| e.get(t))
                .fold((0.0, 0usize), |(s, n), &x| (s + x, n + 1));
            (n > 0).then(|| s / n as f64)
        })
        .collect();
    let defined: Vec<f64> = drift_curve.iter().flatten().copied().collect();
    let mean_drift = defined.iter().sum::<f64>() / defined.len() as f64;
    let final_drift = drift_curve.last().copied().flatten();

    let failures = worldlines
        .iter()
        .zip(&per_line)
        .filter(|(w, e)| e.len() < w.horizon || e.iter().any(|&x| x > fail_tau))
        .count();
    let n = worldlines.len() as f64;
    let traj_length_frames = per_line.iter().map(|e| e.len() as f64).sum::<f64>() / n;
    let traj_length_pct = worldlines
        .iter()
        .zip(&per_line)
        .map(|(w, e)| 100.0 * e.len() as f64 / w.horizon as f64)
        .sum::<f64>()
        / n;

    Ok(WorldlineMetrics {
        l2_error,
        mean_drift,
        final_drift,
        fail_rate: failures as f64 / n,
        traj_length_frames,
        traj_length_pct,
        drift_curve,
        num_worldlines: worldlines.len(),
    })
}
