//! Pinhole cameras, per-frame rasters and the pixel ↔ camera ↔ world maps.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_shape, Grid, Mask};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Default motion threshold for optical flow, pixels.
pub const DEFAULT_FLOW_DELTA_PX: f64 = 0.5;
/// Default motion threshold for scene flow, meters.
pub const DEFAULT_SCENE_FLOW_DELTA_M: f64 = 0.01;

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Pinhole intrinsics, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// Square pixels, principal point at the raster center, horizontal field of view in radians.
    pub fn from_hfov(hfov: f64, width: usize, height: usize) -> Result<Self> {
        if !(hfov > 0.0 && hfov < std::f64::consts::PI) {
            return Err(Error::invalid(format!("horizontal fov {hfov} rad out of (0, π)")));
        }
        let f = 0.5 * width as f64 / (0.5 * hfov).tan();
        Self::new(
            f,
            f,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|x| x.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::invalid(format!(
                "focal lengths must be finite and positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64 && 0.0 <= self.cy && self.cy < self.height as f64) {
            return Err(Error::invalid(format!(
                "principal point ({}, {}) outside {}×{} raster",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Camera-space direction with unit z through pixel `(u, v)`.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    #[inline]
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64
    }
}

/// World → camera rigid transform: `X_cam = R · X_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    rotation: Mat3,
    translation: Vec3,
}

impl CameraPose {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let err = (rotation.transpose() * rotation - Mat3::identity()).abs().max();
        let det = rotation.determinant();
        if !(err <= ORTHONORMAL_TOL) || !((det - 1.0).abs() <= ORTHONORMAL_TOL) {
            return Err(Error::invalid(format!(
                "rotation is not a proper orthonormal matrix (|RᵀR − I| = {err:e}, det = {det})"
            )));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("translation must be finite"));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Camera at `eye` looking at `target`; camera x right, y down, z forward.
    pub fn look_at(eye: Vec3, target: Vec3, world_up: Vec3) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() == 0.0 {
            return Err(Error::invalid("look_at eye and target coincide"));
        }
        let z = forward.normalize();
        let x = z.cross(&world_up);
        if x.norm() < 1e-12 {
            return Err(Error::invalid("look_at direction is parallel to the up vector"));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let rotation = Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        Self::new(rotation, -(rotation * eye))
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    #[inline]
    pub fn apply(&self, world: &Vec3) -> Vec3 {
        self.rotation * world + self.translation
    }

    #[inline]
    pub fn apply_inverse(&self, cam: &Vec3) -> Vec3 {
        self.rotation.transpose() * (cam - self.translation)
    }

    /// The camera → world transform, expressed as a pose.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

/// Metric depth raster with explicit validity.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub values: Grid<f64>,
    pub valid: Mask,
}

impl DepthMap {
    pub fn new(values: Grid<f64>, valid: Mask) -> Result<Self> {
        ensure_same_shape(values.shape(), valid.shape())?;
        for (i, (&d, &ok)) in values.as_slice().iter().zip(valid.as_slice()).enumerate() {
            if ok && !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid(format!(
                    "valid depth at index {i} is {d}; must be finite and > 0"
                )));
            }
        }
        Ok(Self { values, valid })
    }

    /// Derive validity from the values: non-finite and non-positive entries are masked out.
    pub fn from_values(values: Grid<f64>) -> Self {
        let valid = values.map(|&d| d.is_finite() && d > 0.0);
        Self { values, valid }
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_values(Grid::from_fn(width, height, f))
    }

    pub fn constant(width: usize, height: usize, depth: f64) -> Self {
        Self::from_values(Grid::filled(width, height, depth))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// Value at pixel, `None` when invalid.
    pub fn at(&self, u: usize, v: usize) -> Option<f64> {
        self.valid.get(u, v).then(|| *self.values.get(u, v))
    }
}

/// Per-pixel displacement from frame t to t+1, in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub du: Grid<f64>,
    pub dv: Grid<f64>,
    pub valid: Mask,
}

impl FlowField {
    pub fn new(du: Grid<f64>, dv: Grid<f64>, valid: Mask) -> Result<Self> {
        ensure_same_shape(du.shape(), dv.shape())?;
        ensure_same_shape(du.shape(), valid.shape())?;
        for (i, &ok) in valid.as_slice().iter().enumerate() {
            if ok && !(du.as_slice()[i].is_finite() && dv.as_slice()[i].is_finite()) {
                return Err(Error::invalid(format!("valid flow at index {i} is not finite")));
            }
        }
        Ok(Self { du, dv, valid })
    }

    pub fn uniform(width: usize, height: usize, du: f64, dv: f64) -> Self {
        Self {
            du: Grid::filled(width, height, du),
            dv: Grid::filled(width, height, dv),
            valid: Grid::filled(width, height, true),
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::uniform(width, height, 0.0, 0.0)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.du.shape()
    }
}

/// Per-pixel 3D displacement in camera space, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFlowField {
    pub dx: Grid<f64>,
    pub dy: Grid<f64>,
    pub dz: Grid<f64>,
    pub valid: Mask,
}

impl SceneFlowField {
    pub fn new(dx: Grid<f64>, dy: Grid<f64>, dz: Grid<f64>, valid: Mask) -> Result<Self> {
        ensure_same_shape(dx.shape(), dy.shape())?;
        ensure_same_shape(dx.shape(), dz.shape())?;
        ensure_same_shape(dx.shape(), valid.shape())?;
        for (i, &ok) in valid.as_slice().iter().enumerate() {
            let finite = dx.as_slice()[i].is_finite() && dy.as_slice()[i].is_finite() && dz.as_slice()[i].is_finite();
            if ok && !finite {
                return Err(Error::invalid(format!("valid scene flow at index {i} is not finite")));
            }
        }
        Ok(Self { dx, dy, dz, valid })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.dx.shape()
    }
}

/// RGB frame with channels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RgbFrame {
    pub r: Grid<f64>,
    pub g: Grid<f64>,
    pub b: Grid<f64>,
}

impl RgbFrame {
    pub fn new(r: Grid<f64>, g: Grid<f64>, b: Grid<f64>) -> Result<Self> {
        ensure_same_shape(r.shape(), g.shape())?;
        ensure_same_shape(r.shape(), b.shape())?;
        for c in [&r, &g, &b] {
            if let Some(x) = c.as_slice().iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::invalid(format!("rgb channel value {x} outside [0, 1]")));
            }
        }
        Ok(Self { r, g, b })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::new(
            Grid::filled(width, height, rgb[0]),
            Grid::filled(width, height, rgb[1]),
            Grid::filled(width, height, rgb[2]),
        )
    }

    pub fn shape(&self) -> (usize, usize) {
        self.r.shape()
    }

    pub fn channels(&self) -> [&Grid<f64>; 3] {
        [&self.r, &self.g, &self.b]
    }

    /// ITU-R BT.601 luma.
    pub fn luma(&self) -> Grid<f64> {
        let (w, h) = self.shape();
        let (r, g, b) = (self.r.as_slice(), self.g.as_slice(), self.b.as_slice());
        Grid::from_vec(
            w,
            h,
            (0..w * h).map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]).collect(),
        )
        .expect("shape preserved")
    }
}

/// `(x, y, z)` in camera space plus a discrete frame index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point4D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub tau: u32,
}

impl Point4D {
    pub fn new(x: f64, y: f64, z: f64, tau: u32) -> Self {
        Self { x, y, z, tau }
    }

    pub fn from_vec3(p: &Vec3, tau: u32) -> Self {
        Self::new(p.x, p.y, p.z, tau)
    }

    /// Euclidean embedding `(x, y, z, α·τ)`.
    #[inline]
    pub fn embed(&self, alpha: f64) -> [f64; 4] {
        [self.x, self.y, self.z, alpha * self.tau as f64]
    }
}

/// Weighted 4D point collection; `alpha` is meters per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet4D {
    pub points: Vec<Point4D>,
    pub alpha: f64,
}

impl PointSet4D {
    pub fn new(points: Vec<Point4D>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and > 0, got {alpha}")));
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(Error::invalid(format!("non-finite 4D point {p:?}")));
        }
        Ok(Self { points, alpha })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn extend(&mut self, other: PointSet4D) {
        self.points.extend(other.points);
    }
}

/// `depth · K⁻¹ · (u, v, 1)ᵀ`.
pub fn unproject(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Result<Vec3> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::invalid(format!("depth must be finite and > 0, got {depth}")));
    }
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::invalid("pixel coordinates must be finite"));
    }
    Ok(unproject_unchecked(u, v, depth, k))
}

#[inline]
pub(crate) fn unproject_unchecked(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Vec3 {
    Vec3::new(depth * (u - k.cx) / k.fx, depth * (v - k.cy) / k.fy, depth)
}

/// Pixel coordinates and depth of a camera-space point.
pub fn project(point: &Vec3, k: &CameraIntrinsics) -> Result<(f64, f64, f64)> {
    if !(point.z > 0.0) {
        return Err(Error::BehindCamera { z: point.z });
    }
    Ok((
        k.fx * point.x / point.z + k.cx,
        k.fy * point.y / point.z + k.cy,
        point.z,
    ))
}

pub fn world_to_camera(points: &[Vec3], pose: &CameraPose) -> Vec<Vec3> {
    points.iter().map(|p| pose.apply(p)).collect()
}

pub fn camera_to_world(points: &[Vec3], pose: &CameraPose) -> Vec<Vec3> {
    points.iter().map(|p| pose.apply_inverse(p)).collect()
}

/// One 4D point per valid (and selected) pixel, all tagged with `tau`.
pub fn depth_to_points4d(
    depth: &DepthMap,
    k: &CameraIntrinsics,
    tau: u32,
    select: Option<&Mask>,
    alpha: f64,
) -> Result<PointSet4D> {
    ensure_same_shape(k.shape(), depth.shape())?;
    if let Some(sel) = select {
        ensure_same_shape(depth.shape(), sel.shape())?;
    }
    let mut points = Vec::new();
    for (u, v, &ok) in depth.valid.enumerate() {
        if !ok || select.is_some_and(|s| !*s.get(u, v)) {
            continue;
        }
        let d = *depth.values.get(u, v);
        points.push(Point4D::from_vec3(&unproject_unchecked(u as f64, v as f64, d, k), tau));
    }
    if points.is_empty() {
        return Err(Error::EmptySet(format!("no valid selected depth pixels at frame {tau}")));
    }
    PointSet4D::new(points, alpha)
}

/// Anything with a per-pixel motion magnitude and a validity mask.
pub trait MotionField {
    fn shape(&self) -> (usize, usize);
    fn valid(&self) -> &Mask;
    fn magnitude(&self, index: usize) -> f64;
}

impl MotionField for FlowField {
    fn shape(&self) -> (usize, usize) {
        FlowField::shape(self)
    }
    fn valid(&self) -> &Mask {
        &self.valid
    }
    fn magnitude(&self, i: usize) -> f64 {
        self.du.as_slice()[i].hypot(self.dv.as_slice()[i])
    }
}

impl MotionField for SceneFlowField {
    fn shape(&self) -> (usize, usize) {
        SceneFlowField::shape(self)
    }
    fn valid(&self) -> &Mask {
        &self.valid
    }
    fn magnitude(&self, i: usize) -> f64 {
        let (x, y, z) = (self.dx.as_slice()[i], self.dy.as_slice()[i], self.dz.as_slice()[i]);
        (x * x + y * y + z * z).sqrt()
    }
}

/// `‖motion‖₂ > delta` on valid pixels (strict inequality).
pub fn moving_mask<M: MotionField + ?Sized>(motion: &M, delta: f64) -> Mask {
    let (w, h) = motion.shape();
    let valid = motion.valid().as_slice();
    Grid::from_vec(
        w,
        h,
        (0..w * h).map(|i| valid[i] && motion.magnitude(i) > delta).collect(),
    )
    .expect("shape preserved")
}
