//! Camera rigs: fixed multi-view rings and moving (orbit / dolly) trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, CameraPose, Vec3};

pub const DEFAULT_HFOV_DEG: f64 = 60.0;
pub const DEFAULT_RING_RADIUS: f64 = 2.5;
pub const DEFAULT_RING_HEIGHT: f64 = 1.2;
/// Point every default rig looks at.
pub const DEFAULT_TARGET: [f64; 3] = [0.0, 0.35, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CameraMode {
    FixedMultiview,
    /// Circles the target at `angular_rate` rad/s.
    Orbit { angular_rate: f64 },
    /// Translates at `velocity` m/s (world frame) with a fixed orientation.
    Dolly { velocity: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    pub mode: CameraMode,
    pub intrinsics: CameraIntrinsics,
    /// `poses[view][frame]`, world → camera.
    pub poses: Vec<Vec<CameraPose>>,
}

impl CameraRig {
    pub fn view_count(&self) -> usize {
        self.poses.len()
    }

    pub fn pose(&self, view: usize, frame: usize) -> &CameraPose {
        &self.poses[view][frame]
    }

    /// `views` cameras evenly spaced on a ring, each looking at `target`.
    /// `phase` rotates the whole ring (radians).
    pub fn build(
        mode: CameraMode,
        intrinsics: CameraIntrinsics,
        views: usize,
        frames: usize,
        fps: f64,
        phase: f64,
    ) -> Result<Self> {
        if views == 0 || frames == 0 {
            return Err(Error::invalid("camera rig needs at least one view and one frame"));
        }
        let target = Vec3::from(DEFAULT_TARGET);
        let ring_eye = |angle: f64| {
            Vec3::new(
                DEFAULT_RING_RADIUS * angle.sin(),
                DEFAULT_RING_HEIGHT,
                -DEFAULT_RING_RADIUS * angle.cos(),
            )
        };
        let poses = (0..views)
            .map(|view| {
                let base = phase + std::f64::consts::TAU * view as f64 / views as f64;
                match mode {
                    CameraMode::FixedMultiview => {
                        let pose = CameraPose::look_at(ring_eye(base), target, Vec3::y())?;
                        Ok(vec![pose; frames])
                    }
                    CameraMode::Orbit { angular_rate } => (0..frames)
                        .map(|k| {
                            let angle = base + angular_rate * k as f64 / fps;
                            CameraPose::look_at(ring_eye(angle), target, Vec3::y())
                        })
                        .collect(),
                    CameraMode::Dolly { velocity } => {
                        let start = CameraPose::look_at(ring_eye(base), target, Vec3::y())?;
                        let eye0 = ring_eye(base);
                        (0..frames)
                            .map(|k| {
                                let eye = eye0 + Vec3::from(velocity) * (k as f64 / fps);
                                CameraPose::new(*start.rotation(), -(start.rotation() * eye))
                            })
                            .collect()
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mode,
            intrinsics,
            poses,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::from_hfov(DEFAULT_HFOV_DEG.to_radians(), 64, 48).unwrap()
    }

    #[test]
    fn fixed_views_constant_over_time() {
        let rig = CameraRig::build(CameraMode::FixedMultiview, k(), 3, 10, 24.0, 0.2).unwrap();
        assert_eq!(rig.view_count(), 3);
        for view in &rig.poses {
            assert!(view.iter().all(|p| p == &view[0]));
        }
        assert_ne!(rig.pose(0, 0), rig.pose(1, 0));
    }

    #[test]
    fn trajectories_are_continuous() {
        for mode in [
            CameraMode::Orbit { angular_rate: 0.4 },
            CameraMode::Dolly { velocity: [0.0, 0.0, 0.3] },
        ] {
            let rig = CameraRig::build(mode, k(), 1, 24, 24.0, 0.0).unwrap();
            for w in rig.poses[0].windows(2) {
                let step = (w[1].center() - w[0].center()).norm();
                assert!(step > 0.0 && step < 0.05, "{mode:?}: step {step}");
            }
        }
    }
}
