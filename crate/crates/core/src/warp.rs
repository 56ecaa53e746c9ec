//! Backward warping and warp-based consistency errors.
//!
//! `backward_warp(source, flow)` produces, at every pixel `p` of the flow's
//! grid, the bilinear sample of `source` at `p + flow(p)`.
//!
//! The consistency errors compare frame `t` against frame `t+1` pulled back
//! onto frame `t`'s grid with the forward flow `F_{t→t+1}`. Errors and the
//! occlusion split therefore live on frame `t` pixels, which is where
//! renderer occlusion is defined as well.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{DepthMap, FlowField, RgbFrame};
use crate::raster::{bilinear_taps, ensure_same_shape, sample_strict, Grid, Mask};

pub const DEFAULT_CHARBONNIER_EPS: f64 = 1e-3;
pub const DEFAULT_FB_TOLERANCE_PX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct WarpResult {
    pub warped: Vec<Grid<f64>>,
    pub coverage: Mask,
}

/// Per-pixel occlusion flags on the source-frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionMask {
    pub occluded: Mask,
}

impl OcclusionMask {
    pub fn none(width: usize, height: usize) -> Self {
        Self {
            occluded: Grid::filled(width, height, false),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.occluded.shape()
    }
}

/// Mean error over a pixel region; `None` when the region is empty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionErrors {
    pub occluded: Option<f64>,
    pub non_occluded: Option<f64>,
    pub all: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WarpErrors {
    pub l1: RegionErrors,
    pub charbonnier: RegionErrors,
}

#[inline]
pub fn charbonnier(x: f64, eps: f64) -> f64 {
    (x * x + eps * eps).sqrt()
}

/// Bilinear backward warp of every channel in `channels`.
///
/// Coverage is false wherever a tap with non-zero weight is out of bounds or
/// invalid in `valid`, or where the flow itself is invalid.
pub fn backward_warp(channels: &[&Grid<f64>], valid: &Mask, flow: &FlowField) -> Result<WarpResult> {
    let shape = flow.shape();
    ensure_same_shape(shape, valid.shape())?;
    for c in channels {
        ensure_same_shape(shape, c.shape())?;
    }
    let (w, h) = shape;
    let mut warped: Vec<Vec<f64>> = vec![vec![f64::NAN; w * h]; channels.len()];
    let mut coverage = vec![false; w * h];
    let (du, dv, fvalid) = (flow.du.as_slice(), flow.dv.as_slice(), flow.valid.as_slice());
    let vmask = valid.as_slice();
    for i in 0..w * h {
        if !fvalid[i] {
            continue;
        }
        let (u, v) = ((i % w) as f64, (i / w) as f64);
        let Some(taps) = bilinear_taps(u + du[i], v + dv[i], w, h) else {
            continue;
        };
        if !taps.iter().all(|(j, _)| vmask[j]) {
            continue;
        }
        coverage[i] = true;
        for (out, src) in warped.iter_mut().zip(channels) {
            out[i] = sample_strict(src.as_slice(), vmask, &taps).expect("taps checked valid");
        }
    }
    Ok(WarpResult {
        warped: warped
            .into_iter()
            .map(|d| Grid::from_vec(w, h, d).expect("shape preserved"))
            .collect(),
        coverage: Grid::from_vec(w, h, coverage).expect("shape preserved"),
    })
}

/// Backward-warp a depth map; the coverage becomes the validity mask.
pub fn warp_depth(depth: &DepthMap, flow: &FlowField) -> Result<DepthMap> {
    let WarpResult { mut warped, coverage } = backward_warp(&[&depth.values], &depth.valid, flow)?;
    DepthMap::new(warped.pop().expect("one channel"), coverage)
}

/// Backward-warp an RGB frame; returns the warped frame (uncovered pixels black) and coverage.
pub fn warp_rgb(frame: &RgbFrame, flow: &FlowField) -> Result<(RgbFrame, Mask)> {
    let (w, h) = frame.shape();
    let all = Grid::filled(w, h, true);
    let WarpResult { warped, coverage } = backward_warp(&frame.channels(), &all, flow)?;
    let mut it = warped
        .into_iter()
        .map(|g| g.map(|&x| if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) }));
    let (r, g, b) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    Ok((RgbFrame::new(r, g, b)?, coverage))
}

#[derive(Default)]
struct Acc {
    sum: f64,
    n: usize,
}

impl Acc {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.n += 1;
    }
    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

#[derive(Default)]
struct RegionAcc {
    occ: Acc,
    non: Acc,
    all: Acc,
}

impl RegionAcc {
    fn push(&mut self, occluded: bool, x: f64) {
        if occluded {
            self.occ.push(x);
        } else {
            self.non.push(x);
        }
        self.all.push(x);
    }
    fn finish(&self) -> RegionErrors {
        RegionErrors {
            occluded: self.occ.mean(),
            non_occluded: self.non.mean(),
            all: self.all.mean(),
        }
    }
}

/// Per-pixel absolute difference reduced to L1 and Charbonnier means per region.
fn region_errors(
    eval: &Mask,
    occ: Option<&OcclusionMask>,
    eps: f64,
    mut abs_diffs: impl FnMut(usize, &mut dyn FnMut(f64)),
) -> WarpErrors {
    let mut l1 = RegionAcc::default();
    let mut ch = RegionAcc::default();
    for (i, &ok) in eval.as_slice().iter().enumerate() {
        if !ok {
            continue;
        }
        let occluded = occ.is_some_and(|o| o.occluded.as_slice()[i]);
        let (mut s1, mut sc, mut n) = (0.0, 0.0, 0usize);
        abs_diffs(i, &mut |d| {
            s1 += d;
            sc += charbonnier(d, eps);
            n += 1;
        });
        l1.push(occluded, s1 / n as f64);
        ch.push(occluded, sc / n as f64);
    }
    WarpErrors {
        l1: l1.finish(),
        charbonnier: ch.finish(),
    }
}

/// Depth consistency of `depth_t` against `depth_next` pulled back by `flow` (frame t → t+1).
pub fn depth_warp_error(
    depth_t: &DepthMap,
    depth_next: &DepthMap,
    flow: &FlowField,
    occ: Option<&OcclusionMask>,
    eps: f64,
) -> Result<WarpErrors> {
    ensure_same_shape(depth_t.shape(), depth_next.shape())?;
    ensure_same_shape(depth_t.shape(), flow.shape())?;
    if let Some(o) = occ {
        ensure_same_shape(depth_t.shape(), o.shape())?;
    }
    let pulled = warp_depth(depth_next, flow)?;
    let eval = pulled.valid.and(&depth_t.valid)?;
    let (a, b) = (depth_t.values.as_slice(), pulled.values.as_slice());
    Ok(region_errors(&eval, occ, eps, |i, sink| sink((b[i] - a[i]).abs())))
}

/// Photometric consistency of `frame_t` against `frame_next` pulled back by `flow`, averaged over channels.
pub fn rgb_warp_error(
    frame_t: &RgbFrame,
    frame_next: &RgbFrame,
    flow: &FlowField,
    occ: Option<&OcclusionMask>,
    eps: f64,
) -> Result<WarpErrors> {
    ensure_same_shape(frame_t.shape(), frame_next.shape())?;
    ensure_same_shape(frame_t.shape(), flow.shape())?;
    if let Some(o) = occ {
        ensure_same_shape(frame_t.shape(), o.shape())?;
    }
    let (w, h) = frame_t.shape();
    let all = Grid::filled(w, h, true);
    let WarpResult { warped, coverage } = backward_warp(&frame_next.channels(), &all, flow)?;
    let src = frame_t.channels();
    Ok(region_errors(&coverage, occ, eps, |i, sink| {
        for c in 0..3 {
            sink((warped[c].as_slice()[i] - src[c].as_slice()[i]).abs());
        }
    }))
}

/// Forward–backward consistency occlusion check.
///
/// A pixel is occluded when its forward flow is invalid, when the backward
/// flow cannot be sampled at the forward target, or when the round trip
/// misses by more than `tol_px`.
pub fn occlusion_from_fb(flow_fwd: &FlowField, flow_bwd: &FlowField, tol_px: f64) -> Result<OcclusionMask> {
    if !(tol_px > 0.0) {
        return Err(crate::Error::invalid(format!("tolerance must be > 0, got {tol_px}")));
    }
    ensure_same_shape(flow_fwd.shape(), flow_bwd.shape())?;
    let (w, h) = flow_fwd.shape();
    let (fu, fv, fok) = (flow_fwd.du.as_slice(), flow_fwd.dv.as_slice(), flow_fwd.valid.as_slice());
    let (bu, bv, bok) = (flow_bwd.du.as_slice(), flow_bwd.dv.as_slice(), flow_bwd.valid.as_slice());
    let occluded = (0..w * h)
        .map(|i| {
            if !fok[i] {
                return true;
            }
            let (u, v) = ((i % w) as f64 + fu[i], (i / w) as f64 + fv[i]);
            let Some(taps) = bilinear_taps(u, v, w, h) else {
                return true;
            };
            match (sample_strict(bu, bok, &taps), sample_strict(bv, bok, &taps)) {
                (Some(ru), Some(rv)) => (fu[i] + ru).hypot(fv[i] + rv) > tol_px,
                _ => true,
            }
        })
        .collect();
    Ok(OcclusionMask {
        occluded: Grid::from_vec(w, h, occluded)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize) -> Grid<f64> {
        Grid::from_fn(w, h, |u, _| u as f64)
    }

    #[test]
    fn zero_flow_is_identity() {
        let src = Grid::from_fn(5, 4, |u, v| (u * 7 + v * 3) as f64 * 0.37);
        let mut valid = Grid::filled(5, 4, true);
        valid.set(2, 1, false);
        let r = backward_warp(&[&src], &valid, &FlowField::zeros(5, 4)).unwrap();
        assert_eq!(r.coverage, valid);
        for (i, &ok) in valid.as_slice().iter().enumerate() {
            if ok {
                assert_eq!(r.warped[0].as_slice()[i].to_bits(), src.as_slice()[i].to_bits());
            }
        }
    }

    #[test]
    fn constant_flow_on_ramp() {
        let src = ramp(8, 3);
        let valid = Grid::filled(8, 3, true);
        let r = backward_warp(&[&src], &valid, &FlowField::uniform(8, 3, 1.0, 0.0)).unwrap();
        for v in 0..3 {
            for u in 0..7 {
                assert!(*r.coverage.get(u, v));
                assert_eq!(*r.warped[0].get(u, v), u as f64 + 1.0);
            }
            assert!(!*r.coverage.get(7, v), "flow leaves the raster");
        }
        let half = backward_warp(&[&src], &valid, &FlowField::uniform(8, 3, 0.5, 0.0)).unwrap();
        assert!((*half.warped[0].get(3, 1) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_tap_breaks_coverage() {
        let src = ramp(4, 1);
        let mut valid = Grid::filled(4, 1, true);
        valid.set(2, 0, false);
        let r = backward_warp(&[&src], &valid, &FlowField::uniform(4, 1, 0.5, 0.0)).unwrap();
        assert_eq!(r.coverage.as_slice(), &[true, false, false, false]);
    }

    #[test]
    fn shape_mismatch_errors() {
        let src = ramp(4, 2);
        let valid = Grid::filled(4, 2, true);
        assert!(backward_warp(&[&src], &valid, &FlowField::zeros(3, 2)).is_err());
    }

    #[test]
    fn identical_depth_zero_error() {
        let d = DepthMap::from_fn(6, 5, |u, v| 1.0 + 0.1 * u as f64 + 0.05 * v as f64);
        let e = depth_warp_error(&d, &d, &FlowField::zeros(6, 5), None, 1e-3).unwrap();
        assert_eq!(e.l1.all, Some(0.0));
        assert_eq!(e.l1.non_occluded, Some(0.0));
        assert_eq!(e.l1.occluded, None);
        assert!((e.charbonnier.all.unwrap() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn translating_ramp_matches_with_true_flow() {
        // depth_next(u) = depth_t(u - 2): content moved right by two pixels
        let dt = DepthMap::from_fn(10, 2, |u, _| 2.0 + 0.01 * u as f64);
        let dn = DepthMap::from_fn(10, 2, |u, _| 2.0 + 0.01 * (u as f64 - 2.0));
        let e = depth_warp_error(&dt, &dn, &FlowField::uniform(10, 2, 2.0, 0.0), None, 1e-3).unwrap();
        assert!(e.l1.all.unwrap() < 1e-12);
    }

    #[test]
    fn rgb_identity_and_all_occluded() {
        let f = RgbFrame::new(
            Grid::from_fn(4, 4, |u, _| u as f64 / 4.0),
            Grid::filled(4, 4, 0.2),
            Grid::from_fn(4, 4, |_, v| v as f64 / 4.0),
        )
        .unwrap();
        let all_occ = OcclusionMask {
            occluded: Grid::filled(4, 4, true),
        };
        let e = rgb_warp_error(&f, &f, &FlowField::zeros(4, 4), Some(&all_occ), 1e-3).unwrap();
        assert_eq!(e.l1.occluded, Some(0.0));
        assert_eq!(e.l1.non_occluded, None);
        assert_eq!(e.charbonnier.non_occluded, None);
    }

    #[test]
    fn fb_check_examples() {
        let fwd = FlowField::uniform(6, 4, 1.0, 0.0);
        let bwd = FlowField::uniform(6, 4, -1.0, 0.0);
        let occ = occlusion_from_fb(&fwd, &bwd, 1.0).unwrap();
        // last column maps out of bounds
        for v in 0..4 {
            assert!(*occ.occluded.get(5, v));
            for u in 0..5 {
                assert!(!*occ.occluded.get(u, v));
            }
        }
        let inconsistent = FlowField::uniform(6, 4, 1.0, 0.0);
        let occ = occlusion_from_fb(&fwd, &inconsistent, 1.0).unwrap();
        assert_eq!(occ.occluded.count_true(), 24);
        assert!(occlusion_from_fb(&fwd, &bwd, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn charbonnier_bounds(x in -10.0f64..10.0, eps in 1e-6f64..1.0) {
            let c = charbonnier(x, eps);
            prop_assert!(c >= eps && c >= x.abs());
        }

        #[test]
        fn warp_errors_non_negative_and_subset_consistent(
            vals in prop::collection::vec(0.5f64..3.0, 30),
            next in prop::collection::vec(0.5f64..3.0, 30),
            du in -2.0f64..2.0, dv in -2.0f64..2.0,
            occ in prop::collection::vec(any::<bool>(), 30),
        ) {
            let a = DepthMap::from_values(Grid::from_vec(6, 5, vals).unwrap());
            let b = DepthMap::from_values(Grid::from_vec(6, 5, next).unwrap());
            let f = FlowField::uniform(6, 5, du, dv);
            let o = OcclusionMask { occluded: Grid::from_vec(6, 5, occ).unwrap() };
            let e = depth_warp_error(&a, &b, &f, Some(&o), 1e-3).unwrap();
            for x in [e.l1.all, e.l1.occluded, e.l1.non_occluded].into_iter().flatten() {
                prop_assert!(x >= 0.0);
            }
            for x in [e.charbonnier.all, e.charbonnier.occluded, e.charbonnier.non_occluded].into_iter().flatten() {
                prop_assert!(x >= 1e-3);
            }
            // the whole-region mean is the count-weighted mean of the two halves
            let n_all = warp_depth(&b, &f).unwrap().valid.and(&a.valid).unwrap();
            let n_occ = n_all.and(&o.occluded).unwrap().count_true() as f64;
            let n_non = n_all.count_true() as f64 - n_occ;
            if let Some(all) = e.l1.all {
                let recon = (e.l1.occluded.unwrap_or(0.0) * n_occ + e.l1.non_occluded.unwrap_or(0.0) * n_non)
                    / (n_occ + n_non);
                prop_assert!((recon - all).abs() < 1e-12);
            }
        }
    }
}
