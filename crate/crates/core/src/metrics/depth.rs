use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DepthMap;
use crate::raster::ensure_same_shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthAlignment {
    Metric,
    MedianScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEvalConfig {
    pub alignment: DepthAlignment,
    pub delta_base: f64,
}

impl Default for DepthEvalConfig {
    fn default() -> Self {
        Self {
            alignment: DepthAlignment::Metric,
            delta_base: 1.25,
        }
    }
}

/// Threshold accuracies are percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub absrel: f64,
    pub rmse: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

/// Median with the mean of the two middle values for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap, cfg: &DepthEvalConfig) -> Result<DepthMetrics> {
    ensure_same_shape(gt.shape(), pred.shape())?;
    if !(cfg.delta_base > 1.0) {
        return Err(Error::invalid(format!("delta_base must be > 1, got {}", cfg.delta_base)));
    }
    let joint = pred.valid.and(&gt.valid)?;
    let (p, g) = (pred.values.as_slice(), gt.values.as_slice());
    let idx: Vec<usize> = (0..p.len()).filter(|&i| joint.as_slice()[i]).collect();
    if idx.is_empty() {
        return Err(Error::EmptySet("no jointly valid depth pixels".into()));
    }
    if let Some(&i) = idx.iter().find(|&&i| !(g[i] > 0.0)) {
        return Err(Error::invalid(format!("ground-truth depth {} at index {i} in the valid region", g[i])));
    }
    let scale = match cfg.alignment {
        DepthAlignment::Metric => 1.0,
        DepthAlignment::MedianScaled => {
            let mg = median(&mut idx.iter().map(|&i| g[i]).collect::<Vec<_>>()).unwrap();
            let mp = median(&mut idx.iter().map(|&i| p[i]).collect::<Vec<_>>()).unwrap();
            mg / mp
        }
    };
    let thresholds = [cfg.delta_base, cfg.delta_base.powi(2), cfg.delta_base.powi(3)];
    let (mut abs_rel, mut sq, mut hits) = (0.0, 0.0, [0usize; 3]);
    for &i in &idx {
        let (x, y) = (scale * p[i], g[i]);
        abs_rel += (x - y).abs() / y;
        sq += (x - y) * (x - y);
        let ratio = (x / y).max(y / x);
        for (h, &t) in hits.iter_mut().zip(&thresholds) {
            if ratio < t {
                *h += 1;
            }
        }
    }
    let n = idx.len() as f64;
    Ok(DepthMetrics {
        absrel: abs_rel / n,
        rmse: (sq / n).sqrt(),
        delta1: 100.0 * hits[0] as f64 / n,
        delta2: 100.0 * hits[1] as f64 / n,
        delta3: 100.0 * hits[2] as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Grid;
    use proptest::prelude::*;

    fn ramp() -> DepthMap {
        DepthMap::from_fn(7, 5, |u, v| 0.5 + 0.3 * u as f64 + 0.11 * v as f64)
    }

    #[test]
    fn identity() {
        let m = depth_metrics(&ramp(), &ramp(), &DepthEvalConfig::default()).unwrap();
        assert_eq!(
            m,
            DepthMetrics {
                absrel: 0.0,
                rmse: 0.0,
                delta1: 100.0,
                delta2: 100.0,
                delta3: 100.0
            }
        );
    }

    #[test]
    fn doubled_prediction() {
        let gt = ramp();
        let pred = DepthMap::from_values(gt.values.map(|d| 2.0 * d));
        let m = depth_metrics(&pred, &gt, &DepthEvalConfig::default()).unwrap();
        assert!((m.absrel - 1.0).abs() < 1e-12);
        // 2 > 1.25³ = 1.953125
        assert_eq!((m.delta1, m.delta2, m.delta3), (0.0, 0.0, 0.0));
        let cfg = DepthEvalConfig {
            alignment: DepthAlignment::MedianScaled,
            ..Default::default()
        };
        let m = depth_metrics(&pred, &gt, &cfg).unwrap();
        assert!(m.absrel < 1e-15 && m.rmse < 1e-12);
        assert_eq!((m.delta1, m.delta2, m.delta3), (100.0, 100.0, 100.0));
    }

    #[test]
    fn empty_joint_region() {
        let none = DepthMap::constant(7, 5, f64::NAN);
        assert!(matches!(
            depth_metrics(&none, &ramp(), &DepthEvalConfig::default()),
            Err(Error::EmptySet(_))
        ));
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    proptest! {
        #[test]
        fn nested_thresholds_and_scale_invariance(
            gt in prop::collection::vec(0.2f64..10.0, 24),
            pred in prop::collection::vec(0.2f64..10.0, 24),
            s in 0.1f64..10.0,
        ) {
            let g = DepthMap::from_values(Grid::from_vec(6, 4, gt).unwrap());
            let p = DepthMap::from_values(Grid::from_vec(6, 4, pred).unwrap());
            let m = depth_metrics(&p, &g, &DepthEvalConfig::default()).unwrap();
            prop_assert!(m.delta1 <= m.delta2 && m.delta2 <= m.delta3);
            let cfg = DepthEvalConfig { alignment: DepthAlignment::MedianScaled, ..Default::default() };
            let a = depth_metrics(&p, &g, &cfg).unwrap();
            let scaled = DepthMap::from_values(p.values.map(|d| s * d));
            let b = depth_metrics(&scaled, &g, &cfg).unwrap();
            prop_assert!((a.absrel - b.absrel).abs() < 1e-9 && (a.rmse - b.rmse).abs() < 1e-9);
        }
    }
}
