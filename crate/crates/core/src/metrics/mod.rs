//! Per-frame accuracy metrics: depth, optical flow, pixel fidelity and
//! Physics-IQ-style motion-mask scores.

mod depth;
mod flow;
mod physicsiq;
mod pixel;

pub use depth::{depth_metrics, median, DepthAlignment, DepthEvalConfig, DepthMetrics};
pub use flow::{flow_metrics, FlowMetrics, FL_ALL_ABS_PX, FL_ALL_REL};
pub use physicsiq::{motion_masks, physicsiq_scores, MotionMaskConfig, PhysicsIqScores};
pub use pixel::{gaussian_kernel, pixel_metrics, ssim, PixelMetrics, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};

/// Mean of the values, `None` for an empty slice.
pub(crate) fn mean_of(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}
