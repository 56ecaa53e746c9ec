use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RgbFrame;
use crate::raster::{ensure_same_shape, Grid};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// `psnr` is `+∞` for an exact match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelMetrics {
    pub mse: f64,
    #[serde(with = "crate::io::report::inf_sentinel")]
    pub psnr: f64,
    pub ssim: f64,
}

/// Normalised 1D Gaussian taps over `[-radius, radius]`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    if sigma <= 0.0 || radius == 0 {
        return vec![1.0];
    }
    let raw: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / s).collect()
}

/// Separable filter keeping only fully-supported outputs.
fn filter_valid(img: &Grid<f64>, k: &[f64]) -> Grid<f64> {
    let (w, h) = img.shape();
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let src = img.as_slice();
    let mut rows = vec![0.0; ow * h];
    for v in 0..h {
        for u in 0..ow {
            rows[v * ow + u] = k.iter().enumerate().map(|(j, &c)| c * src[v * w + u + j]).sum();
        }
    }
    Grid::from_fn(ow, oh, |u, v| k.iter().enumerate().map(|(j, &c)| c * rows[(v + j) * ow + u]).sum())
}

/// Mean SSIM of two single-channel images in [0, 1] with an 11×11 Gaussian window.
pub fn ssim(a: &Grid<f64>, b: &Grid<f64>) -> Result<f64> {
    ensure_same_shape(a.shape(), b.shape())?;
    let (w, h) = a.shape();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs at least {SSIM_WINDOW}×{SSIM_WINDOW} pixels, got {w}×{h}"
        )));
    }
    let k = gaussian_kernel(SSIM_SIGMA, SSIM_WINDOW / 2);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let prod = |f: &dyn Fn(f64, f64) -> f64| {
        Grid::from_vec(w, h, a.as_slice().iter().zip(b.as_slice()).map(|(&x, &y)| f(x, y)).collect()).unwrap()
    };
    let mu_a = filter_valid(a, &k);
    let mu_b = filter_valid(b, &k);
    let aa = filter_valid(&prod(&|x, _| x * x), &k);
    let bb = filter_valid(&prod(&|_, y| y * y), &k);
    let ab = filter_valid(&prod(&|x, y| x * y), &k);
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a.as_slice()[i], mu_b.as_slice()[i]);
            let va = aa.as_slice()[i] - ma * ma;
            let vb = bb.as_slice()[i] - mb * mb;
            let cov = ab.as_slice()[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / n as f64)
}

pub fn pixel_metrics(pred: &[RgbFrame], gt: &[RgbFrame]) -> Result<PixelMetrics> {
    if pred.len() != gt.len() {
        return Err(Error::invalid(format!(
            "sequence lengths differ ({} vs {})",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptySet("no frames".into()));
    }
    let (mut sq, mut count, mut ssim_sum) = (0.0, 0usize, 0.0);
    for (p, g) in pred.iter().zip(gt) {
        ensure_same_shape(g.shape(), p.shape())?;
        for (cp, cg) in p.channels().iter().zip(g.channels()) {
            for (&x, &y) in cp.as_slice().iter().zip(cg.as_slice()) {
                sq += (x - y) * (x - y);
                count += 1;
            }
        }
        ssim_sum += ssim(&p.luma(), &g.luma())?;
    }
    let mse = sq / count as f64;
    let psnr = if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() };
    Ok(PixelMetrics {
        mse,
        psnr,
        ssim: ssim_sum / pred.len() as f64,
    })
}
