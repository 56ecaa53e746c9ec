//! Exact ray-cast renderer: depth, RGB, object ids, optical flow, scene flow,
//! occlusion and surface point samples for a simulated trace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    project, unproject_unchecked, CameraIntrinsics, CameraPose, DepthMap, FlowField, Point4D, PointSet4D,
    RgbFrame, SceneFlowField, Vec3,
};
use crate::raster::Grid;
use crate::synth::camera::CameraRig;
use crate::synth::scene::Shape;
use crate::synth::sim::SceneTrace;
use crate::warp::OcclusionMask;

/// The ground is a finite square of this half-size (m) centred on the origin.
pub const GROUND_HALF_EXTENT: f64 = 3.0;
/// Depth-test slack (m) for occlusion and visibility decisions.
pub const DEPTH_TEST_TOL: f64 = 1e-4;
const GROUND_TILE: f64 = 0.25;
const AMBIENT: f64 = 0.15;
const SKY_RGB: [f64; 3] = [0.62, 0.74, 0.90];
const MIN_HIT: f64 = 1e-9;

/// Id raster value for background and ground.
pub const GROUND_ID: u32 = 0;

#[derive(Debug, Clone, Copy)]
struct Body {
    shape: Shape,
    center: Vec3,
    albedo: [f64; 3],
}

/// Scene geometry frozen at one instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    bodies: Vec<Body>,
    ground: f64,
    light: Vec3,
    brightness: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Hit {
    /// Ray parameter; equals camera-space depth for rays with unit camera z.
    pub s: f64,
    pub id: u32,
    pub point: Vec3,
    pub normal: Vec3,
}

impl Snapshot {
    pub fn at_frame(trace: &SceneTrace, frame: usize) -> Self {
        let spec = &trace.spec;
        let lux = spec.lighting.intensity_lux.clamp(1.0, 1e6);
        Self {
            bodies: spec
                .objects
                .iter()
                .enumerate()
                .map(|(i, o)| Body {
                    shape: o.shape,
                    center: trace.position(frame, i),
                    albedo: o.albedo,
                })
                .collect(),
            ground: spec.ground_height,
            light: Vec3::from(spec.lighting.direction).normalize(),
            // 100 lux → 0.5, 100 000 lux → 1.0
            brightness: (0.5 + (lux / 100.0).log10() / 6.0).clamp(0.2, 1.0),
        }
    }

    /// Nearest surface along `origin + s·dir`, `s > 0`. Ties go to the lower id.
    pub fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut offer = |h: Hit| {
            if best.is_none_or(|b| h.s < b.s) {
                best = Some(h);
            }
        };
        if dir.y != 0.0 {
            let s = (self.ground - origin.y) / dir.y;
            if s > MIN_HIT {
                let p = origin + dir * s;
                if p.x.abs() <= GROUND_HALF_EXTENT && p.z.abs() <= GROUND_HALF_EXTENT {
                    offer(Hit {
                        s,
                        id: GROUND_ID,
                        point: Vec3::new(p.x, self.ground, p.z),
                        normal: Vec3::y(),
                    });
                }
            }
        }
        for (i, b) in self.bodies.iter().enumerate() {
            let id = i as u32 + 1;
            let hit = match b.shape {
                Shape::Sphere { radius } => ray_sphere(origin, dir, &b.center, radius),
                Shape::Box { half_extents } => ray_box(origin, dir, &b.center, &Vec3::from(half_extents)),
            };
            if let Some((s, normal)) = hit {
                offer(Hit {
                    s,
                    id,
                    point: origin + dir * s,
                    normal,
                });
            }
        }
        best
    }

    fn shade(&self, hit: &Hit) -> [f64; 3] {
        let albedo = if hit.id == GROUND_ID {
            let checker = ((hit.point.x / GROUND_TILE).floor() + (hit.point.z / GROUND_TILE).floor()) as i64;
            if checker.rem_euclid(2) == 0 {
                [0.55; 3]
            } else {
                [0.35; 3]
            }
        } else {
            self.bodies[hit.id as usize - 1].albedo
        };
        let lambert = hit.normal.dot(&self.light).max(0.0);
        let k = self.brightness * (AMBIENT + (1.0 - AMBIENT) * lambert);
        albedo.map(|a| (a * k).clamp(0.0, 1.0))
    }

    fn body_center(&self, id: u32) -> Option<Vec3> {
        (id != GROUND_ID).then(|| self.bodies[id as usize - 1].center)
    }
}

fn ray_sphere(o: &Vec3, d: &Vec3, c: &Vec3, r: f64) -> Option<(f64, Vec3)> {
    let oc = o - c;
    let a = d.norm_squared();
    let b = d.dot(&oc);
    let cc = oc.norm_squared() - r * r;
    let disc = b * b - a * cc;
    if disc < 0.0 || cc <= 0.0 || b >= 0.0 {
        return None;
    }
    // near root (−b − √disc)/a written as cc / (−b + √disc)
    let s = cc / (-b + disc.sqrt());
    (s > MIN_HIT).then(|| (s, ((o + d * s) - c) / r))
}

fn ray_box(o: &Vec3, d: &Vec3, c: &Vec3, h: &Vec3) -> Option<(f64, Vec3)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut axis = 0;
    let mut sign = 0.0;
    for k in 0..3 {
        let (lo, hi) = (c[k] - h[k], c[k] + h[k]);
        if d[k] == 0.0 {
            if o[k] < lo || o[k] > hi {
                return None;
            }
            continue;
        }
        let (mut t0, mut t1) = ((lo - o[k]) / d[k], (hi - o[k]) / d[k]);
        let mut face = -1.0;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
            face = 1.0;
        }
        if t0 > t_near {
            t_near = t0;
            axis = k;
            sign = face;
        }
        t_far = t_far.min(t1);
    }
    if t_near > t_far || t_near <= MIN_HIT {
        return None;
    }
    let mut n = Vec3::zeros();
    n[axis] = sign;
    Some((t_near, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub rgb: RgbFrame,
    pub depth: DepthMap,
    /// Front-most object per pixel: 0 for ground/background, `i + 1` for object `i`.
    pub ids: Grid<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedMotion {
    pub flow: FlowField,
    pub scene_flow: SceneFlowField,
    pub occlusion: OcclusionMask,
}

/// World-space ray through pixel `(u, v)`; its parameter is camera depth.
fn pixel_ray(pose: &CameraPose, k: &CameraIntrinsics, u: f64, v: f64) -> (Vec3, Vec3) {
    (pose.center(), pose.rotation().transpose() * k.ray(u, v))
}

fn cast_all(snap: &Snapshot, pose: &CameraPose, k: &CameraIntrinsics) -> Vec<Option<Hit>> {
    let (w, h) = k.shape();
    (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (o, d) = pixel_ray(pose, k, (i % w) as f64, (i / w) as f64);
            snap.cast(&o, &d)
        })
        .collect()
}

pub fn render_frame(trace: &SceneTrace, frame: usize, rig: &CameraRig, view: usize) -> RenderedFrame {
    let k = &rig.intrinsics;
    let (w, h) = k.shape();
    let snap = Snapshot::at_frame(trace, frame);
    let hits = cast_all(&snap, rig.pose(view, frame), k);
    let mut rgb = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    let mut depth = vec![f64::NAN; w * h];
    let mut ids = vec![GROUND_ID; w * h];
    for (i, hit) in hits.iter().enumerate() {
        let color = match hit {
            Some(hit) => {
                depth[i] = hit.s;
                ids[i] = hit.id;
                snap.shade(hit)
            }
            None => SKY_RGB,
        };
        for c in 0..3 {
            rgb[c][i] = color[c];
        }
    }
    let [r, g, b] = rgb.map(|c| Grid::from_vec(w, h, c).expect("raster shape"));
    RenderedFrame {
        rgb: RgbFrame::new(r, g, b).expect("shaded colors are clamped"),
        depth: DepthMap::from_values(Grid::from_vec(w, h, depth).expect("raster shape")),
        ids: Grid::from_vec(w, h, ids).expect("raster shape"),
    }
}

/// Ground-truth motion of every visible surface point from frame `from` to frame `to`.
///
/// Flow and scene flow are defined on `from`'s pixel grid. A pixel is
/// occluded when its surface point leaves the raster, falls behind the
/// camera, or loses the depth test at `to`.
pub fn render_motion(trace: &SceneTrace, rig: &CameraRig, view: usize, from: usize, to: usize) -> RenderedMotion {
    let k = &rig.intrinsics;
    let (w, h) = k.shape();
    let snap_from = Snapshot::at_frame(trace, from);
    let snap_to = Snapshot::at_frame(trace, to);
    let (pose_from, pose_to) = (rig.pose(view, from), rig.pose(view, to));
    let center_to = pose_to.center();
    let hits = cast_all(&snap_from, pose_from, k);

    struct Px {
        flow: Option<(f64, f64)>,
        scene: Option<Vec3>,
        occluded: bool,
    }
    let px: Vec<Px> = hits
        .par_iter()
        .enumerate()
        .map(|(i, hit)| {
            let Some(hit) = hit else {
                return Px {
                    flow: None,
                    scene: None,
                    occluded: false,
                };
            };
            let (u, v) = ((i % w) as f64, (i / w) as f64);
            let shift = match (snap_from.body_center(hit.id), snap_to.body_center(hit.id)) {
                (Some(a), Some(b)) => b - a,
                _ => Vec3::zeros(),
            };
            let x_from = unproject_unchecked(u, v, hit.s, k);
            // a still point under a still camera reprojects to itself; skip the round trip
            let still = shift == Vec3::zeros() && pose_from == pose_to;
            let x_to = if still { x_from } else { pose_to.apply(&(hit.point + shift)) };
            let scene = Some(x_to - x_from);
            let projected = if still { Ok((u, v, hit.s)) } else { project(&x_to, k) };
            let Ok((pu, pv, z)) = projected else {
                return Px {
                    flow: None,
                    scene,
                    occluded: true,
                };
            };
            let occluded = if k.contains(pu, pv) {
                let dir = pose_to.rotation().transpose() * k.ray(pu, pv);
                snap_to.cast(&center_to, &dir).is_some_and(|h| h.s < z - DEPTH_TEST_TOL)
            } else {
                true
            };
            Px {
                flow: Some((pu - u, pv - v)),
                scene,
                occluded,
            }
        })
        .collect();

    let grid = |f: &dyn Fn(&Px) -> f64| Grid::from_vec(w, h, px.iter().map(f).collect()).expect("raster shape");
    let flow = FlowField::new(
        grid(&|p| p.flow.map_or(f64::NAN, |f| f.0)),
        grid(&|p| p.flow.map_or(f64::NAN, |f| f.1)),
        Grid::from_vec(w, h, px.iter().map(|p| p.flow.is_some()).collect()).expect("raster shape"),
    )
    .expect("finite flow on valid pixels");
    let scene_flow = SceneFlowField::new(
        grid(&|p| p.scene.map_or(f64::NAN, |s| s.x)),
        grid(&|p| p.scene.map_or(f64::NAN, |s| s.y)),
        grid(&|p| p.scene.map_or(f64::NAN, |s| s.z)),
        Grid::from_vec(w, h, px.iter().map(|p| p.scene.is_some()).collect()).expect("raster shape"),
    )
    .expect("finite scene flow on valid pixels");
    let occlusion = OcclusionMask {
        occluded: Grid::from_vec(w, h, px.iter().map(|p| p.occluded).collect()).expect("raster shape"),
    };
    RenderedMotion {
        flow,
        scene_flow,
        occlusion,
    }
}

/// Forward motion from frame `t` to `t + 1`.
pub fn render_flow(trace: &SceneTrace, frame: usize, rig: &CameraRig, view: usize) -> Result<RenderedMotion> {
    if frame + 1 >= trace.frame_count() {
        return Err(Error::invalid(format!(
            "flow needs frame {} but the trace has {} frames",
            frame + 1,
            trace.frame_count()
        )));
    }
    Ok(render_motion(trace, rig, view, frame, frame + 1))
}

/// Whether the world point is the front-most surface seen by the camera.
pub fn is_visible(snap: &Snapshot, pose: &CameraPose, k: &CameraIntrinsics, world: &Vec3) -> bool {
    let cam = pose.apply(world);
    let Ok((u, v, z)) = project(&cam, k) else {
        return false;
    };
    if !k.contains(u, v) {
        return false;
    }
    let dir = pose.rotation().transpose() * k.ray(u, v);
    snap.cast(&pose.center(), &dir).is_none_or(|h| h.s >= z - DEPTH_TEST_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtPointsOptions {
    pub samples_per_object: usize,
    /// Keep only points whose camera-space displacement to the next frame exceeds `delta` (m).
    pub moving_only: bool,
    pub delta: f64,
    /// Keep only samples that pass the depth test from the camera.
    pub visible_only: bool,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for GtPointsOptions {
    fn default() -> Self {
        Self {
            samples_per_object: 2000,
            moving_only: true,
            delta: crate::geometry::DEFAULT_SCENE_FLOW_DELTA_M,
            visible_only: true,
            alpha: crate::chamfer::DEFAULT_ALPHA,
            seed: 0,
        }
    }
}

/// Uniform area samples on the surface, as offsets from the object center.
pub fn surface_samples(shape: &Shape, n: usize, rng: &mut impl Rng) -> Vec<Vec3> {
    (0..n)
        .map(|_| match *shape {
            Shape::Sphere { radius } => loop {
                let p = Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let n2 = p.norm_squared();
                if n2 > 1e-6 && n2 <= 1.0 {
                    break p * (radius / n2.sqrt());
                }
            },
            Shape::Box { half_extents: h } => {
                let areas = [h[1] * h[2], h[0] * h[2], h[0] * h[1]];
                let total: f64 = areas.iter().sum();
                let mut x = rng.random_range(0.0..total);
                let mut axis = 2;
                for (k, a) in areas.iter().enumerate() {
                    if x < *a {
                        axis = k;
                        break;
                    }
                    x -= a;
                }
                let mut p = Vec3::new(
                    rng.random_range(-h[0]..=h[0]),
                    rng.random_range(-h[1]..=h[1]),
                    rng.random_range(-h[2]..=h[2]),
                );
                p[axis] = if rng.random_bool(0.5) { h[axis] } else { -h[axis] };
                p
            }
        })
        .collect()
}

/// Simulator surface points in camera space, tagged with their frame index.
pub fn gt_points4d(trace: &SceneTrace, rig: &CameraRig, view: usize, opts: &GtPointsOptions) -> Result<PointSet4D> {
    if opts.samples_per_object == 0 {
        return Err(Error::invalid("samples_per_object must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let offsets: Vec<Vec<Vec3>> = trace
        .spec
        .objects
        .iter()
        .map(|o| surface_samples(&o.shape, opts.samples_per_object, &mut rng))
        .collect();
    let frames = trace.frame_count();
    let last = if opts.moving_only { frames - 1 } else { frames };
    let k = &rig.intrinsics;
    let per_frame: Vec<Vec<Point4D>> = (0..last)
        .into_par_iter()
        .map(|t| {
            let snap = Snapshot::at_frame(trace, t);
            let pose = rig.pose(view, t);
            let mut pts = Vec::new();
            for (o, offs) in offsets.iter().enumerate() {
                let center = trace.position(t, o);
                for off in offs {
                    let world = center + off;
                    let cam = pose.apply(&world);
                    if opts.moving_only {
                        let next = rig.pose(view, t + 1).apply(&(trace.position(t + 1, o) + off));
                        if (next - cam).norm() <= opts.delta {
                            continue;
                        }
                    }
                    if opts.visible_only && !is_visible(&snap, pose, k, &world) {
                        continue;
                    }
                    pts.push(Point4D::from_vec3(&cam, t as u32));
                }
            }
            pts
        })
        .collect();
    PointSet4D::new(per_frame.into_iter().flatten().collect(), opts.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::camera::CameraMode;
    use crate::synth::scene::{Lighting, ObjectSpec, SceneSpec};
    use crate::synth::sim::simulate;

    fn one_sphere(center: [f64; 3], velocity: [f64; 3], gravity: f64) -> SceneSpec {
        SceneSpec {
            objects: vec![ObjectSpec {
                shape: Shape::Sphere { radius: 1.0 },
                position: center,
                velocity,
                density: 500.0,
                restitution: 0.5,
                friction: 0.5,
                albedo: [0.9, 0.3, 0.1],
            }],
            gravity,
            ground_height: -100.0,
            duration: 0.5,
            fps: 10.0,
            rng_seed: 0,
            complexity: None,
            perturbation_ratio: 0.0,
            lighting: Lighting::default(),
        }
    }

    fn axis_rig(k: CameraIntrinsics, frames: usize) -> CameraRig {
        CameraRig {
            mode: CameraMode::FixedMultiview,
            intrinsics: k,
            poses: vec![vec![CameraPose::identity(); frames]],
        }
    }

    #[test]
    fn sphere_on_axis_center_depth() {
        // camera frame == world frame here: camera looks along +z, y down
        let k = CameraIntrinsics::new(60.0, 60.0, 32.0, 32.0, 65, 65).unwrap();
        let trace = simulate(&one_sphere([0.0, 0.0, 5.0], [0.0; 3], 0.0)).unwrap();
        let f = render_frame(&trace, 0, &axis_rig(k, trace.frame_count()), 0);
        assert!((f.depth.at(32, 32).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(*f.ids.get(32, 32), 1);
        // corners see neither sphere nor (distant, out-of-extent) ground
        assert_eq!(f.depth.at(0, 0), None);
    }

    #[test]
    fn ground_depth_follows_plane_geometry() {
        // camera at height 1 looking horizontally: ground row v hits at depth f·h/(v − cy)
        let k = CameraIntrinsics::new(50.0, 50.0, 20.0, 20.0, 41, 41).unwrap();
        let mut spec = one_sphere([0.0, 50.0, 0.0], [0.0; 3], 0.0);
        spec.ground_height = 0.0;
        let trace = simulate(&spec).unwrap();
        let pose = CameraPose::look_at(Vec3::new(0.0, 1.0, -2.0), Vec3::new(0.0, 1.0, 0.0), Vec3::y()).unwrap();
        let rig = CameraRig {
            mode: CameraMode::FixedMultiview,
            intrinsics: k,
            poses: vec![vec![pose; trace.frame_count()]],
        };
        let f = render_frame(&trace, 0, &rig, 0);
        for v in 0..=20 {
            assert_eq!(f.depth.at(20, v), None, "upper half is sky at row {v}");
        }
        for v in 21..41 {
            let expect = 50.0 * 1.0 / (v as f64 - 20.0);
            if expect <= 2.0 + GROUND_HALF_EXTENT {
                assert!((f.depth.at(20, v).unwrap() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn static_scene_has_zero_motion() {
        let k = CameraIntrinsics::new(60.0, 60.0, 32.0, 32.0, 65, 65).unwrap();
        let trace = simulate(&one_sphere([0.0, 0.0, 5.0], [0.0; 3], 0.0)).unwrap();
        let m = render_flow(&trace, 0, &axis_rig(k, trace.frame_count()), 0).unwrap();
        for i in 0..m.flow.valid.len() {
            if m.flow.valid.as_slice()[i] {
                assert_eq!(m.flow.du.as_slice()[i], 0.0);
                assert_eq!(m.scene_flow.dz.as_slice()[i], 0.0);
            }
        }
        assert_eq!(m.occlusion.occluded.count_true(), 0);
    }

    #[test]
    fn dolly_gives_uniform_scene_flow() {
        let k = CameraIntrinsics::new(60.0, 60.0, 32.0, 32.0, 65, 65).unwrap();
        let trace = simulate(&one_sphere([0.0, 0.0, 5.0], [0.0; 3], 0.0)).unwrap();
        let poses: Vec<CameraPose> = (0..trace.frame_count())
            .map(|t| CameraPose::new(nalgebra::Matrix3::identity(), Vec3::new(0.0, 0.0, 0.1 * t as f64)).unwrap())
            .collect();
        let rig = CameraRig {
            mode: CameraMode::Dolly { velocity: [0.0, 0.0, -1.0] },
            intrinsics: k,
            poses: vec![poses],
        };
        let m = render_flow(&trace, 1, &rig, 0).unwrap();
        let mut n = 0;
        for i in 0..m.scene_flow.valid.len() {
            if m.scene_flow.valid.as_slice()[i] {
                assert!(m.scene_flow.dx.as_slice()[i].abs() < 1e-12);
                assert!(m.scene_flow.dy.as_slice()[i].abs() < 1e-12);
                assert!((m.scene_flow.dz.as_slice()[i] - 0.1).abs() < 1e-12);
                n += 1;
            }
        }
        assert!(n > 100);
    }

    #[test]
    fn sphere_samples_lie_on_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for p in surface_samples(&Shape::Sphere { radius: 0.3 }, 500, &mut rng) {
            assert!((p.norm() - 0.3).abs() < 1e-12);
        }
        let h = [0.1, 0.2, 0.3];
        for p in surface_samples(&Shape::Box { half_extents: h }, 500, &mut rng) {
            let on_face = (0..3).any(|k| (p[k].abs() - h[k]).abs() < 1e-15);
            let inside = (0..3).all(|k| p[k].abs() <= h[k]);
            assert!(on_face && inside);
        }
    }

    #[test]
    fn static_object_contributes_no_moving_points() {
        let k = CameraIntrinsics::new(60.0, 60.0, 32.0, 32.0, 65, 65).unwrap();
        let trace = simulate(&one_sphere([0.0, 0.0, 5.0], [0.0; 3], 0.0)).unwrap();
        let rig = axis_rig(k, trace.frame_count());
        let opts = GtPointsOptions::default();
        let pts = gt_points4d(&trace, &rig, 0, &opts).unwrap();
        assert!(pts.is_empty());
        let all = gt_points4d(
            &trace,
            &rig,
            0,
            &GtPointsOptions {
                moving_only: false,
                visible_only: false,
                ..opts
            },
        )
        .unwrap();
        assert_eq!(all.len(), opts.samples_per_object * trace.frame_count());
        for p in &all.points {
            let r = (Vec3::new(p.x, p.y, p.z) - Vec3::new(0.0, 0.0, 5.0)).norm();
            assert!((r - 1.0).abs() < 1e-9);
        }
    }
}
