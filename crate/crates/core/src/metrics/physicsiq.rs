//! Motion-mask agreement between a predicted and a reference video.
//!
//! A pixel is "moving" at frame t when the Gaussian-smoothed absolute luma
//! change relative to frame 0 exceeds `diff_threshold`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RgbFrame;
use crate::metrics::{gaussian_kernel, mean_of, pixel_metrics};
use crate::raster::{ensure_same_shape, Grid, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionMaskConfig {
    pub diff_threshold: f64,
    /// Gaussian σ in pixels; the kernel spans ⌈3σ⌉ pixels each side. 0 disables smoothing.
    pub smoothing_sigma: f64,
}

impl Default for MotionMaskConfig {
    fn default() -> Self {
        Self {
            diff_threshold: 0.05,
            smoothing_sigma: 1.5,
        }
    }
}

impl MotionMaskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.diff_threshold > 0.0 && self.diff_threshold < 1.0) {
            return Err(Error::invalid(format!("diff_threshold {} not in (0, 1)", self.diff_threshold)));
        }
        if !(self.smoothing_sigma >= 0.0) {
            return Err(Error::invalid("smoothing_sigma must be ≥ 0"));
        }
        Ok(())
    }

    pub fn smoothing_radius(&self) -> usize {
        (3.0 * self.smoothing_sigma).ceil() as usize
    }
}

/// IoUs are `None` when both masks are empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsIqScores {
    pub spatial_iou: Option<f64>,
    pub spatiotemporal_iou: Option<f64>,
    pub weighted_spatial_iou: Option<f64>,
    pub mse: f64,
}

/// Separable blur with edge renormalisation.
fn blur(img: &Grid<f64>, k: &[f64]) -> Grid<f64> {
    if k.len() == 1 {
        return img.clone();
    }
    let r = (k.len() / 2) as isize;
    let (w, h) = img.shape();
    let pass = |src: &Grid<f64>, horizontal: bool| {
        Grid::from_fn(w, h, |u, v| {
            let (mut acc, mut ws) = (0.0, 0.0);
            for (j, &c) in k.iter().enumerate() {
                let o = j as isize - r;
                let (x, y) = if horizontal { (u as isize + o, v as isize) } else { (u as isize, v as isize + o) };
                if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                    acc += c * src.get(x as usize, y as usize);
                    ws += c;
                }
            }
            acc / ws
        })
    };
    pass(&pass(img, true), false)
}

/// One motion mask per frame; frame 0 is the reference and never moves.
pub fn motion_masks(frames: &[RgbFrame], cfg: &MotionMaskConfig) -> Result<Vec<Mask>> {
    cfg.validate()?;
    let Some(first) = frames.first() else {
        return Err(Error::EmptySet("no frames".into()));
    };
    let k = gaussian_kernel(cfg.smoothing_sigma, cfg.smoothing_radius());
    let reference = first.luma();
    frames
        .iter()
        .map(|f| {
            ensure_same_shape(first.shape(), f.shape())?;
            let luma = f.luma();
            let diff = Grid::from_vec(
                luma.width(),
                luma.height(),
                luma.as_slice().iter().zip(reference.as_slice()).map(|(a, b)| (a - b).abs()).collect(),
            )?;
            Ok(blur(&diff, &k).map(|&d| d > cfg.diff_threshold))
        })
        .collect()
}

fn iou(a: &Mask, b: &Mask) -> Option<f64> {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    (union > 0).then(|| inter as f64 / union as f64)
}

fn time_max(masks: &[Mask]) -> Mask {
    let (w, h) = masks[0].shape();
    Grid::from_fn(w, h, |u, v| masks.iter().any(|m| *m.get(u, v)))
}

fn frequency(masks: &[Mask]) -> Vec<f64> {
    let n = masks[0].len();
    (0..n)
        .map(|i| masks.iter().filter(|m| m.as_slice()[i]).count() as f64 / masks.len() as f64)
        .collect()
}

pub fn physicsiq_scores(pred: &[RgbFrame], gt: &[RgbFrame], cfg: &MotionMaskConfig) -> Result<PhysicsIqScores> {
    if pred.len() != gt.len() {
        return Err(Error::invalid(format!("sequence lengths differ ({} vs {})", pred.len(), gt.len())));
    }
    let mp = motion_masks(pred, cfg)?;
    let mg = motion_masks(gt, cfg)?;
    ensure_same_shape(mg[0].shape(), mp[0].shape())?;

    let spatial_iou = iou(&time_max(&mp), &time_max(&mg));
    let spatiotemporal_iou = mean_of(mp.iter().zip(&mg).filter_map(|(a, b)| iou(a, b)));
    let (fp, fg) = (frequency(&mp), frequency(&mg));
    let (mut num, mut den) = (0.0, 0.0);
    for (&a, &b) in fp.iter().zip(&fg) {
        num += a.min(b);
        den += a.max(b);
    }
    let weighted_spatial_iou = (den > 0.0).then(|| num / den);
    Ok(PhysicsIqScores {
        spatial_iou,
        spatiotemporal_iou,
        weighted_spatial_iou,
        mse: pixel_metrics(pred, gt)?.mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(square_at: impl Fn(usize) -> Option<(usize, usize)>, n: usize) -> Vec<RgbFrame> {
        (0..n)
            .map(|t| {
                let g = Grid::from_fn(32, 32, |u, v| match square_at(t) {
                    Some((x, y)) if (x..x + 6).contains(&u) && (y..y + 6).contains(&v) => 0.9,
                    _ => 0.1,
                });
                RgbFrame::new(g.clone(), g.clone(), g).unwrap()
            })
            .collect()
    }

    #[test]
    fn identical_videos() {
        let v = video(|t| (t > 0).then_some((2 + 3 * t, 10)), 5);
        let s = physicsiq_scores(&v, &v, &MotionMaskConfig::default()).unwrap();
        assert_eq!(s.spatial_iou, Some(1.0));
        assert_eq!(s.spatiotemporal_iou, Some(1.0));
        assert_eq!(s.weighted_spatial_iou, Some(1.0));
        assert_eq!(s.mse, 0.0);
    }

    #[test]
    fn static_prediction_scores_zero() {
        let gt = video(|t| (t > 0).then_some((2 + 3 * t, 10)), 5);
        let still = video(|_| None, 5);
        let s = physicsiq_scores(&still, &gt, &MotionMaskConfig::default()).unwrap();
        assert_eq!(s.spatial_iou, Some(0.0));
        assert_eq!(s.spatiotemporal_iou, Some(0.0));
        assert_eq!(s.weighted_spatial_iou, Some(0.0));
    }

    #[test]
    fn disjoint_regions() {
        let a = video(|t| (t > 0).then_some((2, 2)), 3);
        let b = video(|t| (t > 0).then_some((20, 20)), 3);
        let s = physicsiq_scores(&a, &b, &MotionMaskConfig::default()).unwrap();
        assert_eq!(s.spatial_iou, Some(0.0));
    }

    #[test]
    fn both_static_is_absent() {
        let still = video(|_| None, 3);
        let s = physicsiq_scores(&still, &still, &MotionMaskConfig::default()).unwrap();
        assert_eq!((s.spatial_iou, s.spatiotemporal_iou, s.weighted_spatial_iou), (None, None, None));
    }

    #[test]
    fn config_validation() {
        let bad = MotionMaskConfig { diff_threshold: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!(MotionMaskConfig::default().smoothing_radius(), 5);
    }
}
