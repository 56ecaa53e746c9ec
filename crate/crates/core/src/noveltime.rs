//! Novel-time interpolation: observed/novel split, flow-warped depth at the
//! held-out frames, and the two novel-time errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, FlowField};
use crate::raster::ensure_same_shape;
use crate::warp::warp_depth;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineSplit {
    pub observed: Vec<usize>,
    pub novel: Vec<usize>,
}

impl TimelineSplit {
    /// Even frames observed, odd frames novel.
    pub fn even_odd(frame_count: usize) -> Self {
        Self {
            observed: (0..frame_count).step_by(2).collect(),
            novel: (1..frame_count).step_by(2).collect(),
        }
    }

    pub fn new(frame_count: usize, mut observed: Vec<usize>, mut novel: Vec<usize>) -> Result<Self> {
        observed.sort_unstable();
        novel.sort_unstable();
        let mut all: Vec<usize> = observed.iter().chain(&novel).copied().collect();
        all.sort_unstable();
        if all != (0..frame_count).collect::<Vec<_>>() {
            return Err(Error::invalid(
                "observed and novel frames must be disjoint and cover every frame exactly once",
            ));
        }
        Ok(Self { observed, novel })
    }

    /// `(observed t, novel t+1)` pairs usable for one-step interpolation.
    pub fn interpolation_pairs(&self) -> Vec<(usize, usize)> {
        self.novel
            .iter()
            .filter(|&&n| n > 0 && self.observed.binary_search(&(n - 1)).is_ok())
            .map(|&n| (n - 1, n))
            .collect()
    }
}

/// Depth at the novel frame: the previous observed depth backward-warped by the predicted flow.
pub fn interpolate_depth(depth_prev: &DepthMap, flow_pred: &FlowField) -> Result<DepthMap> {
    warp_depth(depth_prev, flow_pred)
}

/// Mean absolute difference over the joint validity; `None` when it is empty.
pub fn masked_l1(a: &DepthMap, b: &DepthMap) -> Result<Option<f64>> {
    ensure_same_shape(a.shape(), b.shape())?;
    let mask = a.valid.and(&b.valid)?;
    let (x, y) = (a.values.as_slice(), b.values.as_slice());
    let (s, n) = mask
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (i, _)| (s + (x[i] - y[i]).abs(), n + 1));
    Ok((n > 0).then(|| s / n as f64))
}

/// `‖D̃_t − D^gt_t‖₁` at one novel frame.
pub fn novel_depth_error(interpolated: &DepthMap, gt_novel: &DepthMap) -> Result<Option<f64>> {
    masked_l1(interpolated, gt_novel)
}

/// `‖warp(D^pred_{t−1}, F^gt) − D̃_t‖₁` at one novel frame.
pub fn novel_warp_error(depth_prev_pred: &DepthMap, flow_gt: &FlowField, interpolated: &DepthMap) -> Result<Option<f64>> {
    let reference = warp_depth(depth_prev_pred, flow_gt)?;
    masked_l1(&reference, interpolated)
}

/// Per-sequence aggregate over novel frames; skipped frames had an empty joint mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovelTimeSummary {
    pub depth_error: Option<f64>,
    pub warp_error: Option<f64>,
    pub novel_frames: usize,
    pub skipped_depth_frames: usize,
    pub skipped_warp_frames: usize,
}

/// Run the protocol over a sequence.
///
/// `flows_pred[t]` and `flows_gt[t]` span frame t → t+1.
pub fn evaluate_sequence(
    split: &TimelineSplit,
    depths_pred: &[DepthMap],
    depths_gt: &[DepthMap],
    flows_pred: &[FlowField],
    flows_gt: &[FlowField],
) -> Result<NovelTimeSummary> {
    let pairs = split.interpolation_pairs();
    let (mut de, mut we) = (Vec::new(), Vec::new());
    for &(t, n) in &pairs {
        let (Some(dp), Some(dg)) = (depths_pred.get(t), depths_gt.get(n)) else {
            return Err(Error::invalid(format!("missing depth for frames {t}/{n}")));
        };
        let (Some(fp), Some(fg)) = (flows_pred.get(t), flows_gt.get(t)) else {
            return Err(Error::invalid(format!("missing flow spanning frame {t} → {n}")));
        };
        let interp = interpolate_depth(dp, fp)?;
        de.push(novel_depth_error(&interp, dg)?);
        we.push(novel_warp_error(dp, fg, &interp)?);
    }
    let reduce = |xs: &[Option<f64>]| {
        let vals: Vec<f64> = xs.iter().flatten().copied().collect();
        let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
        (mean, xs.len() - vals.len())
    };
    let (depth_error, skipped_depth_frames) = reduce(&de);
    let (warp_error, skipped_warp_frames) = reduce(&we);
    Ok(NovelTimeSummary {
        depth_error,
        warp_error,
        novel_frames: pairs.len(),
        skipped_depth_frames,
        skipped_warp_frames,
    })
}
