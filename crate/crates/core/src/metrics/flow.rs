use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FlowField;
use crate::raster::ensure_same_shape;

/// Fl-all outlier: endpoint error above this many pixels …
pub const FL_ALL_ABS_PX: f64 = 3.0;
/// … and above this fraction of the ground-truth magnitude.
pub const FL_ALL_REL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowMetrics {
    pub epe: f64,
    pub fl_all_pct: f64,
    pub out_1px_pct: f64,
    pub out_3px_pct: f64,
}

pub fn flow_metrics(pred: &FlowField, gt: &FlowField) -> Result<FlowMetrics> {
    ensure_same_shape(gt.shape(), pred.shape())?;
    let joint = pred.valid.and(&gt.valid)?;
    let (pu, pv, gu, gv) = (
        pred.du.as_slice(),
        pred.dv.as_slice(),
        gt.du.as_slice(),
        gt.dv.as_slice(),
    );
    let (mut sum, mut n, mut fl, mut o1, mut o3) = (0.0, 0usize, 0usize, 0usize, 0usize);
    for (i, _) in joint.as_slice().iter().enumerate().filter(|(_, &m)| m) {
        let epe = (pu[i] - gu[i]).hypot(pv[i] - gv[i]);
        let mag = gu[i].hypot(gv[i]);
        sum += epe;
        n += 1;
        fl += usize::from(epe > FL_ALL_ABS_PX && epe > FL_ALL_REL * mag);
        o1 += usize::from(epe > 1.0);
        o3 += usize::from(epe > 3.0);
    }
    if n == 0 {
        return Err(Error::EmptySet("no jointly valid flow pixels".into()));
    }
    let pct = |k: usize| 100.0 * k as f64 / n as f64;
    Ok(FlowMetrics {
        epe: sum / n as f64,
        fl_all_pct: pct(fl),
        out_1px_pct: pct(o1),
        out_3px_pct: pct(o3),
    })
}
