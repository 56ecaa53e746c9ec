//! Metric suites over a predicted and a ground-truth sequence.
//!
//! Frames are evaluated in parallel and reduced in frame order, so reports
//! do not depend on the worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chamfer::{chamfer4d, subsample, Acceleration, ChamferConfig, DEFAULT_ALPHA, DEFAULT_POINT_BUDGET};
use crate::dataset::Sequence;
use crate::error::{Error, Result};
use crate::geometry::{
    depth_to_points4d, moving_mask, CameraIntrinsics, DepthMap, FlowField, PointSet4D, SceneFlowField,
    DEFAULT_FLOW_DELTA_PX, DEFAULT_SCENE_FLOW_DELTA_M,
};
use crate::io::manifest::Modality;
use crate::io::report::{number, SuiteReport};
use crate::metrics::{
    depth_metrics, flow_metrics, physicsiq_scores, pixel_metrics, DepthEvalConfig, MotionMaskConfig, FL_ALL_ABS_PX,
    FL_ALL_REL, SSIM_WINDOW,
};
use crate::noveltime::{evaluate_sequence, TimelineSplit};
use crate::raster::{Grid, Mask};
use crate::warp::{
    depth_warp_error, occlusion_from_fb, rgb_warp_error, OcclusionMask, RegionErrors, WarpErrors,
    DEFAULT_CHARBONNIER_EPS, DEFAULT_FB_TOLERANCE_PX,
};
use crate::worldline::{
    lift_3d, sample_seeds, track_2d, worldline_metrics, WorldlineMetrics, DEFAULT_FAIL_TAU_M, DEFAULT_NUM_SEEDS,
    DEFAULT_SEED,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Depth,
    Warp,
    Flow,
    Chamfer4d,
    Worldline,
    Noveltime,
    Physicsiq,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Depth,
        Suite::Warp,
        Suite::Flow,
        Suite::Chamfer4d,
        Suite::Worldline,
        Suite::Noveltime,
        Suite::Physicsiq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Depth => "depth",
            Suite::Warp => "warp",
            Suite::Flow => "flow",
            Suite::Chamfer4d => "chamfer4d",
            Suite::Worldline => "worldline",
            Suite::Noveltime => "noveltime",
            Suite::Physicsiq => "physicsiq",
        }
    }

    /// Parse a suite name; `all` expands to every suite.
    pub fn parse_list(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Ok(vec![name.parse()?])
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown suite {s:?}")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the ground-truth 4D point set comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtPointSource {
    /// Unprojected ground-truth depth with ground-truth motion selection,
    /// built exactly like the predicted set.
    Depth,
    /// The simulator surface samples stored with the ground-truth sequence.
    Simulator,
}

/// Worldline seed pixels at frame 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedRegion {
    /// Object pixels from the ground-truth id raster, falling back to depth-valid pixels when there are none.
    Objects,
    /// Every ground-truth depth-valid pixel.
    Depth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub alpha: f64,
    /// Scene-flow motion threshold, meters.
    pub delta_m: f64,
    /// Optical-flow motion threshold, pixels (used when scene flow is absent).
    pub delta_px: f64,
    pub fail_tau: f64,
    pub charbonnier_eps: f64,
    pub fb_tolerance_px: f64,
    pub depth: DepthEvalConfig,
    pub seeds: usize,
    pub seed: u64,
    pub seed_region: SeedRegion,
    pub point_budget: usize,
    pub gt_points: GtPointSource,
    pub motion_masks: MotionMaskConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            delta_m: DEFAULT_SCENE_FLOW_DELTA_M,
            delta_px: DEFAULT_FLOW_DELTA_PX,
            fail_tau: DEFAULT_FAIL_TAU_M,
            charbonnier_eps: DEFAULT_CHARBONNIER_EPS,
            fb_tolerance_px: DEFAULT_FB_TOLERANCE_PX,
            depth: DepthEvalConfig::default(),
            seeds: DEFAULT_NUM_SEEDS,
            seed: DEFAULT_SEED,
            seed_region: SeedRegion::Objects,
            point_budget: DEFAULT_POINT_BUDGET,
            gt_points: GtPointSource::Depth,
            motion_masks: MotionMaskConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("delta", self.delta_m),
            ("delta_px", self.delta_px),
            ("fail_tau", self.fail_tau),
            ("charbonnier_eps", self.charbonnier_eps),
            ("fb_tolerance_px", self.fb_tolerance_px),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Validation(format!("{name} must be finite and > 0, got {x}")));
            }
        }
        if self.seeds == 0 || self.point_budget == 0 {
            return Err(Error::Validation("seeds and point budget must be ≥ 1".into()));
        }
        if !(self.depth.delta_base > 1.0) {
            return Err(Error::Validation("depth delta base must be > 1".into()));
        }
        self.motion_masks
            .validate()
            .map_err(|e| Error::Validation(e.to_string()))
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, number)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("metric structs serialize")
}

/// Frame-level evaluation where frames with no jointly valid pixels are skipped and counted.
fn per_frame<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<(Vec<T>, usize)> {
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(&f).collect();
    let mut kept = Vec::with_capacity(n);
    let mut skipped = 0;
    for r in results {
        match r {
            Ok(x) => kept.push(x),
            Err(Error::EmptySet(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((kept, skipped))
}

fn check_compatible(pred: &Sequence, gt: &Sequence) -> Result<()> {
    let (a, b) = (&pred.manifest, &gt.manifest);
    if a.resolution != b.resolution {
        return Err(Error::Validation(format!(
            "resolution mismatch: prediction is {}x{}, ground truth is {}x{}",
            a.resolution[0], a.resolution[1], b.resolution[0], b.resolution[1]
        )));
    }
    if a.frame_count != b.frame_count {
        return Err(Error::Validation(format!(
            "frame count mismatch: prediction has {}, ground truth has {}",
            a.frame_count, b.frame_count
        )));
    }
    if a.frame_count < 2 {
        return Err(Error::Validation("sequences need at least two frames".into()));
    }
    Ok(())
}

/// Run `suites` and return one report entry per suite, keyed by suite name.
pub fn evaluate(pred: &Sequence, gt: &Sequence, suites: &[Suite], cfg: &EvalConfig) -> Result<BTreeMap<String, SuiteReport>> {
    cfg.validate()?;
    check_compatible(pred, gt)?;
    for &s in suites {
        for m in required_modalities(s, cfg, gt) {
            pred.require(m, s.name())?;
            gt.require(m, s.name())?;
        }
    }
    let mut out = BTreeMap::new();
    for &s in suites {
        let report = match s {
            Suite::Depth => depth_suite(pred, gt, cfg)?,
            Suite::Warp => warp_suite(pred, gt, cfg)?,
            Suite::Flow => flow_suite(pred, gt)?,
            Suite::Chamfer4d => chamfer_suite(pred, gt, cfg)?,
            Suite::Worldline => worldline_suite(pred, gt, cfg)?,
            Suite::Noveltime => noveltime_suite(pred, gt, cfg)?,
            Suite::Physicsiq => physicsiq_suite(pred, gt, cfg)?,
        };
        out.insert(s.name().to_string(), report);
    }
    Ok(out)
}

fn required_modalities(s: Suite, cfg: &EvalConfig, gt: &Sequence) -> Vec<Modality> {
    match s {
        Suite::Depth => vec![Modality::Depth],
        Suite::Warp => vec![Modality::Depth, Modality::Rgb, Modality::Flow],
        Suite::Flow => vec![Modality::Flow],
        Suite::Chamfer4d => {
            let mut m = vec![Modality::Depth];
            // motion selection falls back to optical flow when scene flow is absent
            if !gt.has(Modality::SceneFlow) {
                m.push(Modality::Flow);
            }
            if cfg.gt_points == GtPointSource::Simulator {
                m.clear();
            }
            m
        }
        Suite::Worldline | Suite::Noveltime => vec![Modality::Depth, Modality::Flow],
        Suite::Physicsiq => vec![Modality::Rgb],
    }
}

fn depth_suite(pred: &Sequence, gt: &Sequence, cfg: &EvalConfig) -> Result<SuiteReport> {
    let (dp, dg) = (pred.depths()?, gt.depths()?);
    let (ms, skipped) = per_frame(dp.len(), |t| depth_metrics(&dp[t], &dg[t], &cfg.depth))?;
    Ok(SuiteReport {
        config: json!({ "alignment": cfg.depth.alignment, "delta_base": cfg.depth.delta_base }),
        metrics: json!({
            "absrel": opt(mean(ms.iter().map(|m| m.absrel))),
            "rmse": opt(mean(ms.iter().map(|m| m.rmse))),
            "delta1_pct": opt(mean(ms.iter().map(|m| m.delta1))),
            "delta2_pct": opt(mean(ms.iter().map(|m| m.delta2))),
            "delta3_pct": opt(mean(ms.iter().map(|m| m.delta3))),
            "frames": ms.len(),
            "skipped_frames": skipped,
        }),
    })
}

fn flow_suite(pred: &Sequence, gt: &Sequence) -> Result<SuiteReport> {
    let (fp, fg) = (pred.flows()?, gt.flows()?);
    let (ms, skipped) = per_frame(fp.len(), |t| flow_metrics(&fp[t], &fg[t]))?;
    Ok(SuiteReport {
        config: json!({ "fl_all_abs_px": FL_ALL_ABS_PX, "fl_all_rel": FL_ALL_REL }),
        metrics: json!({
            "epe": opt(mean(ms.iter().map(|m| m.epe))),
            "fl_all_pct": opt(mean(ms.iter().map(|m| m.fl_all_pct))),
            "out_1px_pct": opt(mean(ms.iter().map(|m| m.out_1px_pct))),
            "out_3px_pct": opt(mean(ms.iter().map(|m| m.out_3px_pct))),
            "frames": ms.len(),
            "skipped_frames": skipped,
        }),
    })
}

/// Which occlusion masks the warp and region splits use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionSource {
    Renderer,
    ForwardBackward,
    None,
}

fn gt_occlusions(gt: &Sequence, cfg: &EvalConfig) -> Result<(OcclusionSource, Option<Vec<OcclusionMask>>)> {
    if gt.has(Modality::Occlusion) {
        return Ok((OcclusionSource::Renderer, Some(gt.occlusions()?)));
    }
    if gt.has(Modality::FlowBackward) {
        let (f, b) = (gt.flows()?, gt.flows_backward()?);
        let occ = f
            .par_iter()
            .zip(&b)
            .map(|(f, b)| occlusion_from_fb(f, b, cfg.fb_tolerance_px))
            .collect::<Result<Vec<_>>>()?;
        return Ok((OcclusionSource::ForwardBackward, Some(occ)));
    }
    Ok((OcclusionSource::None, None))
}

/// Frame-averaged region errors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanWarpErrors {
    pub l1: RegionErrors,
    pub charbonnier: RegionErrors,
}

fn mean_regions(xs: &[RegionErrors]) -> RegionErrors {
    RegionErrors {
        occluded: mean(xs.iter().filter_map(|r| r.occluded)),
        non_occluded: mean(xs.iter().filter_map(|r| r.non_occluded)),
        all: mean(xs.iter().filter_map(|r| r.all)),
    }
}

fn mean_warp(xs: &[WarpErrors]) -> MeanWarpErrors {
    MeanWarpErrors {
        l1: mean_regions(&xs.iter().map(|e| e.l1).collect::<Vec<_>>()),
        charbonnier: mean_regions(&xs.iter().map(|e| e.charbonnier).collect::<Vec<_>>()),
    }
}

/// Depth warp error of `depths[t]` against `depths_next_gt[t+1]` pulled back by the ground-truth flow.
pub fn depth_warp_sequence(
    depths: &[DepthMap],
    depths_gt: &[DepthMap],
    flows_gt: &[FlowField],
    occ: Option<&[OcclusionMask]>,
    eps: f64,
) -> Result<MeanWarpErrors> {
    let errs = (0..flows_gt.len())
        .into_par_iter()
        .map(|t| depth_warp_error(&depths[t], &depths_gt[t + 1], &flows_gt[t], occ.map(|o| &o[t]), eps))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_warp(&errs))
}

fn regions_json(value: &RegionErrors, baseline: &RegionErrors) -> Value {
    let one = |a: Option<f64>, b: Option<f64>| {
        json!({
            "value": opt(a),
            "baseline": opt(b),
            "excess": opt(a.zip(b).map(|(a, b)| a - b)),
        })
    };
    json!({
        "occluded": one(value.occluded, baseline.occluded),
        "non_occluded": one(value.non_occluded, baseline.non_occluded),
        "all": one(value.all, baseline.all),
    })
}

fn warp_json(value: &MeanWarpErrors, baseline: &MeanWarpErrors) -> Value {
    json!({
        "l1": regions_json(&value.l1, &baseline.l1),
        "charbonnier": regions_json(&value.charbonnier, &baseline.charbonnier),
    })
}

/// `value` is the prediction's error, `baseline` the same error computed on
/// the ground truth itself, `excess = value − baseline`.
fn warp_suite(pred: &Sequence, gt: &Sequence, cfg: &EvalConfig) -> Result<SuiteReport> {
    let (source, occ) = gt_occlusions(gt, cfg)?;
    let occ = occ.as_deref();
    let (dp, dg, fg) = (pred.depths()?, gt.depths()?, gt.flows()?);
    let eps = cfg.charbonnier_eps;
    let depth_value = depth_warp_sequence(&dp, &dg, &fg, occ, eps)?;
    let depth_base = depth_warp_sequence(&dg, &dg, &fg, occ, eps)?;

    let (ip, ig, fp) = (pred.rgbs()?, gt.rgbs()?, pred.flows()?);
    let rgb = |frames: &[crate::geometry::RgbFrame], flows: &[FlowField]| -> Result<MeanWarpErrors> {
        let errs = (0..flows.len())
            .into_par_iter()
            .map(|t| rgb_warp_error(&frames[t], &frames[t + 1], &flows[t], occ.map(|o| &o[t]), eps))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean_warp(&errs))
    };
    let rgb_value = rgb(&ip, &fp)?;
    let rgb_base = rgb(&ig, &fg)?;
    Ok(SuiteReport {
        config: json!({
            "charbonnier_eps": eps,
            "occlusion_source": source,
            "fb_tolerance_px": cfg.fb_tolerance_px,
            "interpolation": "bilinear",
        }),
        metrics: json!({
            "depth": warp_json(&depth_value, &depth_base),
            "rgb": warp_json(&rgb_value, &rgb_base),
            "lpips": null,
            "frame_pairs": fg.len(),
        }),
    })
}

/// Motion used to select moving pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionSource {
    SceneFlow,
    OpticalFlow,
}

/// Moving-pixel masks for frames `0..T−1`, preferring scene flow.
pub fn moving_masks(seq: &Sequence, cfg: &EvalConfig) -> Result<(MotionSource, Vec<Mask>)> {
    if seq.has(Modality::SceneFlow) {
        let sf: Vec<SceneFlowField> = seq.scene_flows()?;
        Ok((MotionSource::SceneFlow, sf.iter().map(|s| moving_mask(s, cfg.delta_m)).collect()))
    } else {
        seq.require(Modality::Flow, Suite::Chamfer4d.name())?;
        let f = seq.flows()?;
        Ok((MotionSource::OpticalFlow, f.iter().map(|s| moving_mask(s, cfg.delta_px)).collect()))
    }
}

/// Unprojected moving pixels of every frame that has motion, tagged with the frame index.
pub fn moving_points4d(depths: &[DepthMap], masks: &[Mask], k: &CameraIntrinsics, alpha: f64) -> Result<PointSet4D> {
    let (sets, _) = per_frame(masks.len(), |t| depth_to_points4d(&depths[t], k, t as u32, Some(&masks[t]), alpha))?;
    let mut all = PointSet4D::new(Vec::new(), alpha)?;
    for s in sets {
        all.extend(s);
    }
    Ok(all)
}

fn chamfer_suite(pred: &Sequence, gt: &Sequence, cfg: &EvalConfig) -> Result<SuiteReport> {
    let (pred_source, pred_masks) = moving_masks(pred, cfg)?;
    let gen = moving_points4d(&pred.depths()?, &pred_masks, pred.intrinsics(), cfg.alpha)?;
    let (gt_source, gt_set) = match cfg.gt_points {
        GtPointSource::Depth => {
            let (src, masks) = moving_masks(gt, cfg)?;
            (Some(src), moving_points4d(&gt.depths()?, &masks, gt.intrinsics(), cfg.alpha)?)
        }
        GtPointSource::Simulator => {
            gt.require(Modality::Points4d, Suite::Chamfer4d.name())?;
            let mut s = gt.points4d()?;
            s.alpha = cfg.alpha;
            (None, s)
        }
    };
    let gen_used = subsample(&gen, cfg.point_budget, cfg.seed);
    let gt_used = subsample(&gt_set, cfg.point_budget, cfg.seed.wrapping_add(1));
    let chamfer_cfg = ChamferConfig::new(cfg.alpha, Acceleration::Indexed)?;
    let cd = if gen_used.is_empty() || gt_used.is_empty() {
        None
    } else {
        Some(chamfer4d(&gen_used, &gt_used, &chamfer_cfg)?)
    };
    Ok(SuiteReport {
        config: json!({
            "alpha": cfg.alpha,
            "delta_m": cfg.delta_m,
            "delta_px": cfg.delta_px,
            "pred_motion_source": pred_source,
            "gt_motion_source": gt_source,
            "gt_points": cfg.gt_points,
            "point_budget": cfg.point_budget,
            "seed": cfg.seed,
            "distance": "squared",
        }),
        metrics: json!({
            "chamfer4d": opt(cd),
            "reward": opt(cd.map(|c| 0.0 - c)),
            "gen_points": gen.len(),
            "gt_points": gt_set.len(),
            "gen_points_used": gen_used.len(),
            "gt_points_used": gt_used.len(),
        }),
    })
}

/// Seed-pixel mask at frame 0.
pub fn seed_mask(depth_gt0: &DepthMap, ids_gt0: Option<&Grid<u32>>, region: SeedRegion) -> Result<Mask> {
    let depth_valid = depth_gt0.valid.clone();
    if let (SeedRegion::Objects, Some(ids)) = (region, ids_gt0) {
        let objects = depth_valid.and(&ids.map(|&id| id != 0))?;
        if objects.count_true() > 0 {
            return Ok(objects);
        }
    }
    Ok(depth_valid)
}

/// Worldlines from `seeds` tracked with ground-truth flow, lifted with both depth sequences.
pub fn worldline_eval(
    mask: &Mask,
    flows_gt: &[FlowField],
    depths_pred: &[DepthMap],
    depths_gt: &[DepthMap],
    k: &CameraIntrinsics,
    cfg: &EvalConfig,
) -> Result<WorldlineMetrics> {
    let seeds = sample_seeds(mask, cfg.seeds, cfg.seed)?;
    let tracks = track_2d(&seeds, flows_gt)?;
    let lifted = lift_3d(tracks, depths_pred, depths_gt, k)?;
    worldline_metrics(&lifted, cfg.fail_tau)
}

fn worldline_suite(pred: &Sequence, gt: &Sequence, cfg: &EvalConfig) -> Result<SuiteReport> {
    let (dp, dg, fg) = (pred.depths()?, gt.depths()?, gt.flows()?);
    let ids = if gt.has(Modality::Ids) { Some(gt.ids()?) } else { None };
    let mask = seed_mask(&dg[0], ids.as_ref().map(|i| &i[0]), cfg.seed_region)?;
    let m = worldline_eval(&mask, &fg, &dp, &dg, gt.intrinsics(), cfg)?;
    Ok(SuiteReport {
        config: json!({
            "fail_tau": cfg.fail_tau,
            "seeds": cfg.seeds,
            "seed": cfg.seed,
            "seed_region": cfg.seed_region,
            "broken_tracks_fail": true,
        }),
        metrics: to_value(&m),
    })
}

fn noveltime_suite(pred: &Sequence, gt: &Sequence, _cfg: &EvalConfig) -> Result<SuiteReport> {
    let (dp, dg, fp, fg) = (pred.depths()?, gt.depths()?, pred.flows()?, gt.flows()?);
    let split = TimelineSplit::even_odd(dp.len());
    let value = evaluate_sequence(&split, &dp, &dg, &fp, &fg)?;
    let base = evaluate_sequence(&split, &dg, &dg, &fg, &fg)?;
    let pair = |a: Option<f64>, b: Option<f64>| {
        json!({ "value": opt(a), "baseline": opt(b), "excess": opt(a.zip(b).map(|(a, b)| a - b)) })
    };
    Ok(SuiteReport {
        config: json!({ "split": "even_odd", "observed": split.observed, "novel": split.novel }),
        metrics: json!({
            "depth_error": pair(value.depth_error, base.depth_error),
            "warp_error": opt(value.warp_error),
            "novel_frames": value.novel_frames,
            "skipped_depth_frames": value.skipped_depth_frames,
            "skipped_warp_frames": value.skipped_warp_frames,
        }),
    })
}

fn physicsiq_suite(pred: &Sequence, gt: &Sequence, cfg: &EvalConfig) -> Result<SuiteReport> {
    let (ip, ig) = (pred.rgbs()?, gt.rgbs()?);
    let scores = physicsiq_scores(&ip, &ig, &cfg.motion_masks)?;
    let (w, h) = gt.manifest.shape();
    let fidelity = if w >= SSIM_WINDOW && h >= SSIM_WINDOW {
        to_value(&pixel_metrics(&ip, &ig)?)
    } else {
        Value::Null
    };
    Ok(SuiteReport {
        config: json!({
            "diff_threshold": cfg.motion_masks.diff_threshold,
            "smoothing_sigma": cfg.motion_masks.smoothing_sigma,
            "reference_frame": 0,
        }),
        metrics: json!({
            "spatial_iou": opt(scores.spatial_iou),
            "spatiotemporal_iou": opt(scores.spatiotemporal_iou),
            "weighted_spatial_iou": opt(scores.weighted_spatial_iou),
            "mse": number(scores.mse),
            "frame_fidelity": fidelity,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!(Suite::parse_list("all").unwrap().len(), 7);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn config_validation() {
        EvalConfig::default().validate().unwrap();
        let bad = EvalConfig {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn seed_mask_prefers_objects() {
        let d = DepthMap::constant(4, 4, 2.0);
        let ids = Grid::from_fn(4, 4, |u, _| u32::from(u == 1));
        assert_eq!(seed_mask(&d, Some(&ids), SeedRegion::Objects).unwrap().count_true(), 4);
        assert_eq!(seed_mask(&d, Some(&ids), SeedRegion::Depth).unwrap().count_true(), 16);
        let none = Grid::filled(4, 4, 0u32);
        assert_eq!(seed_mask(&d, Some(&none), SeedRegion::Objects).unwrap().count_true(), 16);
    }
}
