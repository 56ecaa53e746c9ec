use world4d_core::geometry::{unproject, CameraIntrinsics, DepthMap, FlowField, Vec3};
use world4d_core::noveltime::{evaluate_sequence, TimelineSplit};
use world4d_core::raster::Grid;
use world4d_core::synth::scene::{Lighting, ObjectSpec, SceneSpec, Shape};
use world4d_core::synth::sim::SceneTrace;
use world4d_core::synth::{randomize_scene, render_frame, render_motion, simulate, CameraMode, CameraRig};
use world4d_core::warp::rgb_warp_error;
use world4d_core::worldline::{lift_3d, sample_seeds, track_2d};

fn rig(trace: &SceneTrace, mode: CameraMode, views: usize, w: usize, h: usize) -> CameraRig {
    let k = CameraIntrinsics::from_hfov(60f64.to_radians(), w, h).unwrap();
    CameraRig::build(mode, k, views, trace.frame_count(), trace.spec.fps, 0.2).unwrap()
}

fn surface_distance(shape: &Shape, center: &Vec3, p: &Vec3) -> f64 {
    match *shape {
        Shape::Sphere { radius } => ((p - center).norm() - radius).abs(),
        Shape::Box { half_extents } => {
            let d = (p - center).abs() - Vec3::from(half_extents);
            let outside = d.map(|x| x.max(0.0)).norm();
            (outside + d.max().min(0.0)).abs()
        }
    }
}

#[test]
fn every_depth_pixel_lies_on_the_named_surface() {
    for (seed, mode) in [(1, CameraMode::FixedMultiview), (2, CameraMode::Orbit { angular_rate: 0.5 })] {
        let trace = simulate(&randomize_scene(None, seed)).unwrap();
        let rig = rig(&trace, mode, 3, 64, 48);
        let k = rig.intrinsics;
        for view in 0..3 {
            for t in [0, trace.frame_count() / 2, trace.frame_count() - 1] {
                let f = render_frame(&trace, t, &rig, view);
                let mut hits = 0;
                for (u, v, &ok) in f.depth.valid.enumerate() {
                    if !ok {
                        continue;
                    }
                    let cam = unproject(u as f64, v as f64, *f.depth.values.get(u, v), &k).unwrap();
                    let world = rig.pose(view, t).apply_inverse(&cam);
                    let id = *f.ids.get(u, v) as usize;
                    let err = if id == 0 {
                        (world.y - trace.spec.ground_height).abs()
                    } else {
                        let o = &trace.spec.objects[id - 1];
                        surface_distance(&o.shape, &trace.position(t, id - 1), &world)
                    };
                    assert!(err < 1e-9, "seed {seed} view {view} frame {t} pixel ({u},{v}) off surface by {err}");
                    hits += 1;
                }
                assert!(hits > 0);
            }
        }
    }
}

#[test]
fn views_agree_on_shared_world_points() {
    // a point seen by view 0 and visible from view 1 projects onto a view-1 pixel whose depth matches
    let trace = simulate(&randomize_scene(None, 5)).unwrap();
    let rig = rig(&trace, CameraMode::FixedMultiview, 2, 128, 128);
    let k = rig.intrinsics;
    let (a, b) = (render_frame(&trace, 0, &rig, 0), render_frame(&trace, 0, &rig, 1));
    let (mut checked, mut agree) = (0, 0);
    for (u, v, &ok) in a.depth.valid.enumerate() {
        if !ok {
            continue;
        }
        let world = rig.pose(0, 0).apply_inverse(&unproject(u as f64, v as f64, *a.depth.values.get(u, v), &k).unwrap());
        let cam1 = rig.pose(1, 0).apply(&world);
        let Ok((pu, pv, z)) = world4d_core::geometry::project(&cam1, &k) else { continue };
        let (iu, iv) = (pu.round(), pv.round());
        if (pu - iu).abs() > 0.15 || (pv - iv).abs() > 0.15 || !k.contains(iu, iv) {
            continue;
        }
        let Some(d1) = b.depth.at(iu as usize, iv as usize) else { continue };
        checked += 1;
        // the nearest pixel centre differs by ≤ 0.15 px; the depth slope bounds the mismatch
        if (d1 - z).abs() < 2e-2 * z {
            agree += 1;
        } else {
            assert!(d1 < z, "view 1 sees farther ({d1}) than a surface at {z}");
        }
    }
    assert!(checked > 20, "only {checked} correspondences");
    assert!(agree as f64 > 0.5 * checked as f64, "{agree}/{checked}");
}

#[test]
fn rgb_warp_with_gt_flow_is_small_off_occlusions() {
    let trace = simulate(&randomize_scene(None, 21)).unwrap();
    let rig = rig(&trace, CameraMode::FixedMultiview, 1, 128, 128);
    for t in [0, 7, 15] {
        let (f0, f1) = (render_frame(&trace, t, &rig, 0), render_frame(&trace, t + 1, &rig, 0));
        let m = render_motion(&trace, &rig, 0, t, t + 1);
        let e = rgb_warp_error(&f0.rgb, &f1.rgb, &m.flow, Some(&m.occlusion), 1e-3).unwrap();
        let c = e.charbonnier.non_occluded.unwrap();
        assert!(c < 0.02, "frame {t}: {c}");
    }
}

fn sliding_sphere() -> SceneSpec {
    SceneSpec {
        objects: vec![ObjectSpec {
            shape: Shape::Sphere { radius: 0.25 },
            position: [-0.4, 0.5, 0.0],
            velocity: [0.6, 0.0, 0.0],
            density: 500.0,
            restitution: 0.5,
            friction: 0.5,
            albedo: [0.8, 0.3, 0.2],
        }],
        gravity: 0.0,
        ground_height: 0.0,
        duration: 1.0,
        fps: 24.0,
        rng_seed: 0,
        complexity: None,
        perturbation_ratio: 0.0,
        lighting: Lighting::default(),
    }
}

fn render_sequence(trace: &SceneTrace, rig: &CameraRig) -> (Vec<DepthMap>, Vec<FlowField>) {
    let n = trace.frame_count();
    let depths = (0..n).map(|t| render_frame(trace, t, rig, 0).depth).collect();
    let flows = (0..n - 1).map(|t| render_motion(trace, rig, 0, t, t + 1).flow).collect();
    (depths, flows)
}

fn mean_abs_change(a: &DepthMap, b: &DepthMap) -> f64 {
    let (mut s, mut n) = (0.0, 0);
    for i in 0..a.values.len() {
        if a.valid.as_slice()[i] && b.valid.as_slice()[i] {
            s += (a.values.as_slice()[i] - b.values.as_slice()[i]).abs();
            n += 1;
        }
    }
    s / n as f64
}

#[test]
fn novel_depth_error_on_translating_sphere_is_within_twice_one_frame_change() {
    let trace = simulate(&sliding_sphere()).unwrap();
    let rig = rig(&trace, CameraMode::FixedMultiview, 1, 128, 128);
    let (depths, flows) = render_sequence(&trace, &rig);
    let split = TimelineSplit::even_odd(depths.len());
    let s = evaluate_sequence(&split, &depths, &depths, &flows, &flows).unwrap();
    let one_frame: f64 =
        (1..depths.len()).map(|t| mean_abs_change(&depths[t - 1], &depths[t])).sum::<f64>() / (depths.len() - 1) as f64;
    let err = s.depth_error.unwrap();
    assert!(err < 2.0 * one_frame, "novel depth error {err} vs one-frame change {one_frame}");
}

/// Bilinear pull-back written from scratch: sample `src` at `x + flow(x)`
/// when all four neighbours are valid.
fn reference_warp(src: &DepthMap, flow: &FlowField) -> Vec<Option<f64>> {
    let (w, h) = src.shape();
    let mut out = vec![None; w * h];
    for v in 0..h {
        for u in 0..w {
            if !*flow.valid.get(u, v) {
                continue;
            }
            let x = u as f64 + flow.du.get(u, v);
            let y = v as f64 + flow.dv.get(u, v);
            let (x0, y0) = (x.floor(), y.floor());
            if x0 < 0.0 || y0 < 0.0 || x0 as usize + 1 > w - 1 && x != x0 || y0 as usize + 1 > h - 1 && y != y0 {
                continue;
            }
            if x0 as usize >= w || y0 as usize >= h {
                continue;
            }
            let (fx, fy) = (x - x0, y - y0);
            let (i0, j0) = (x0 as usize, y0 as usize);
            let mut acc = 0.0;
            let mut ok = true;
            for (du, dv, wgt) in [(0, 0, (1.0 - fx) * (1.0 - fy)), (1, 0, fx * (1.0 - fy)), (0, 1, (1.0 - fx) * fy), (1, 1, fx * fy)] {
                if wgt == 0.0 {
                    continue;
                }
                match src.at(i0 + du, j0 + dv) {
                    Some(d) => acc += wgt * d,
                    None => ok = false,
                }
            }
            if ok {
                out[v * w + u] = Some(acc);
            }
        }
    }
    out
}

fn reference_l1(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let pairs: Vec<f64> = a.iter().zip(b).filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).abs())).collect();
    (!pairs.is_empty()).then(|| pairs.iter().sum::<f64>() / pairs.len() as f64)
}

#[test]
fn noveltime_pipeline_matches_scripted_reference() {
    let trace = simulate(&randomize_scene(None, 33)).unwrap();
    let rig = rig(&trace, CameraMode::Orbit { angular_rate: 0.3 }, 1, 96, 72);
    let (depths_gt, flows_gt) = render_sequence(&trace, &rig);
    // a degraded prediction: scaled depth and a shifted flow
    let depths_pred: Vec<DepthMap> = depths_gt
        .iter()
        .map(|d| DepthMap::new(d.values.map(|x| 1.03 * x), d.valid.clone()).unwrap())
        .collect();
    let flows_pred: Vec<FlowField> = flows_gt
        .iter()
        .map(|f| FlowField::new(f.du.map(|x| x + 0.3), f.dv.map(|x| x - 0.2), f.valid.clone()).unwrap())
        .collect();
    let split = TimelineSplit::even_odd(depths_gt.len());
    let s = evaluate_sequence(&split, &depths_pred, &depths_gt, &flows_pred, &flows_gt).unwrap();

    let (mut de, mut we) = (Vec::new(), Vec::new());
    for n in (1..depths_gt.len()).step_by(2) {
        let interp = reference_warp(&depths_pred[n - 1], &flows_pred[n - 1]);
        let gt: Vec<Option<f64>> = (0..depths_gt[n].values.len())
            .map(|i| depths_gt[n].valid.as_slice()[i].then(|| depths_gt[n].values.as_slice()[i]))
            .collect();
        de.extend(reference_l1(&interp, &gt));
        we.extend(reference_l1(&reference_warp(&depths_pred[n - 1], &flows_gt[n - 1]), &interp));
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((s.depth_error.unwrap() - mean(&de)).abs() < 1e-9, "{:?} vs {}", s.depth_error, mean(&de));
    assert!((s.warp_error.unwrap() - mean(&we)).abs() < 1e-9, "{:?} vs {}", s.warp_error, mean(&we));
}

#[test]
fn one_pixel_flow_error_on_a_ramp_costs_the_depth_gradient() {
    // depth ramp D(u) = 2 + 0.01·u; predicted flow off by one pixel along u
    let (w, h) = (40, 30);
    let slope = 0.01;
    let ramp = DepthMap::from_fn(w, h, |u, _| 2.0 + slope * u as f64);
    let depths = vec![ramp.clone(), ramp.clone()];
    let gt_flow = vec![FlowField::zeros(w, h)];
    let pred_flow = vec![FlowField::uniform(w, h, 1.0, 0.0)];
    let split = TimelineSplit::even_odd(2);
    let s = evaluate_sequence(&split, &depths, &depths, &pred_flow, &gt_flow).unwrap();
    let predicted = slope * 1.0;
    let measured = s.warp_error.unwrap();
    assert!((measured - predicted).abs() <= 0.2 * predicted, "{measured} vs {predicted}");
}

#[test]
fn gt_depth_worldlines_coincide() {
    let trace = simulate(&randomize_scene(None, 8)).unwrap();
    let rig = rig(&trace, CameraMode::FixedMultiview, 1, 96, 96);
    let (depths, flows) = render_sequence(&trace, &rig);
    let seeds = sample_seeds(&depths[0].valid, 300, 42).unwrap();
    let lifted = lift_3d(track_2d(&seeds, &flows).unwrap(), &depths, &depths, &rig.intrinsics).unwrap();
    assert!(lifted.iter().any(|w| w.valid_len > 1));
    for w in &lifted {
        assert_eq!(w.positions_3d_pred, w.positions_3d_gt);
    }
}

#[test]
fn ids_raster_matches_object_count() {
    let trace = simulate(&randomize_scene(None, 12)).unwrap();
    let rig = rig(&trace, CameraMode::FixedMultiview, 1, 64, 64);
    let f = render_frame(&trace, 0, &rig, 0);
    let n = trace.spec.objects.len() as u32;
    assert!(f.ids.as_slice().iter().all(|&id| id <= n));
    let _: &Grid<u32> = &f.ids;
}
