//! Sequence directories: writing synthetic datasets and loading any
//! manifest-described sequence.
//!
//! ```text
//! <out>/view_00/manifest.json
//!              /rgb/00000.png  depth/00000.d4df  ids/00000.png
//!              /flow/00000.flo  flow_backward/00000.flo
//!              /scene_flow/00000_x.d4df (…_y, …_z)  occlusion/00000.png
//!              /points4d.ply
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::chamfer::DEFAULT_ALPHA;
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap, FlowField, PointSet4D, RgbFrame, SceneFlowField, DEFAULT_SCENE_FLOW_DELTA_M};
use crate::io::manifest::{read_manifest, write_manifest, Extrinsics, Modalities, Modality, Provenance, SequenceManifest, Units, SCHEMA_VERSION};
use crate::io::{
    read_depth, read_flow, read_ids, read_mask, read_points4d, read_rgb, read_scene_flow, write_depth, write_flow,
    write_ids, write_mask, write_points4d, write_rgb, write_scene_flow,
};
use crate::raster::{Grid, Mask};
use crate::synth::camera::{CameraMode, CameraRig, DEFAULT_HFOV_DEG};
use crate::synth::render::{gt_points4d, render_frame, render_motion, GtPointsOptions};
use crate::synth::scene::SceneSpec;
use crate::synth::sim::{simulate, FRICTION_MODEL};
use crate::warp::OcclusionMask;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GENERATOR: &str = "world4d-synth";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub views: usize,
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    /// Overrides the spec's frame rate.
    pub fps: Option<f64>,
    /// Overrides the spec's duration, seconds.
    pub duration: Option<f64>,
    pub camera: CameraMode,
    pub points_per_object: usize,
    pub points_seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            views: 1,
            width: 256,
            height: 256,
            hfov_deg: DEFAULT_HFOV_DEG,
            fps: None,
            duration: None,
            camera: CameraMode::FixedMultiview,
            points_per_object: 2000,
            points_seed: 0,
        }
    }
}

pub fn view_dir(out_dir: &Path, view: usize) -> PathBuf {
    out_dir.join(format!("view_{view:02}"))
}

fn modalities() -> Modalities {
    Modalities {
        rgb: Some("rgb/{frame}.png".into()),
        depth: Some("depth/{frame}.d4df".into()),
        ids: Some("ids/{frame}.png".into()),
        flow: Some("flow/{frame}.flo".into()),
        flow_backward: Some("flow_backward/{frame}.flo".into()),
        scene_flow: Some("scene_flow/{frame}_{axis}.d4df".into()),
        occlusion: Some("occlusion/{frame}.png".into()),
        points4d: Some("points4d.ply".into()),
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

/// Simulate `spec`, render every view and write one sequence directory per
/// view. Returns the manifest paths in view order.
pub fn synthesize(spec: &SceneSpec, seed: Option<u64>, opts: &SynthOptions, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut spec = spec.clone();
    if let Some(fps) = opts.fps {
        spec.fps = fps;
    }
    if let Some(d) = opts.duration {
        spec.duration = d;
    }
    spec.validate().map_err(|e| Error::Validation(e.to_string()))?;
    if opts.views == 0 {
        return Err(Error::Validation("views must be ≥ 1".into()));
    }
    let trace = simulate(&spec)?;
    let frames = trace.frame_count();
    let k = CameraIntrinsics::from_hfov(opts.hfov_deg.to_radians(), opts.width, opts.height)
        .map_err(|e| Error::Validation(e.to_string()))?;
    let rig = CameraRig::build(opts.camera, k, opts.views, frames, spec.fps, 0.0)?;

    let mut manifests = Vec::with_capacity(opts.views);
    for view in 0..opts.views {
        let dir = view_dir(out_dir, view);
        let manifest = SequenceManifest {
            schema_version: SCHEMA_VERSION,
            frame_count: frames,
            fps: spec.fps,
            resolution: [opts.width, opts.height],
            units: Units::default(),
            intrinsics: k,
            extrinsics: (0..frames).map(|t| Extrinsics::from_pose(t, rig.pose(view, t))).collect(),
            modalities: modalities(),
            provenance: Provenance::Synthetic {
                generator: GENERATOR.into(),
                seed,
                view,
                camera: opts.camera,
                friction_model: FRICTION_MODEL.into(),
                spec: spec.clone(),
            },
        };
        let file = |m: Modality, t: usize| -> Result<PathBuf> {
            let p = manifest.path(&dir, m, t)?;
            create_parent(&p)?;
            Ok(p)
        };
        for t in 0..frames {
            let f = render_frame(&trace, t, &rig, view);
            write_rgb(&file(Modality::Rgb, t)?, &f.rgb)?;
            write_depth(&file(Modality::Depth, t)?, &f.depth)?;
            write_ids(&file(Modality::Ids, t)?, &f.ids)?;
            if t + 1 < frames {
                let fwd = render_motion(&trace, &rig, view, t, t + 1);
                let bwd = render_motion(&trace, &rig, view, t + 1, t);
                write_flow(&file(Modality::Flow, t)?, &fwd.flow)?;
                write_flow(&file(Modality::FlowBackward, t)?, &bwd.flow)?;
                write_mask(&file(Modality::Occlusion, t)?, &fwd.occlusion.occluded)?;
                file(Modality::SceneFlow, t)?;
                let [x, y, z] = manifest.scene_flow_paths(&dir, t)?;
                write_scene_flow([&x, &y, &z], &fwd.scene_flow)?;
            }
        }
        let points = gt_points4d(
            &trace,
            &rig,
            view,
            &GtPointsOptions {
                samples_per_object: opts.points_per_object,
                moving_only: true,
                delta: DEFAULT_SCENE_FLOW_DELTA_M,
                visible_only: true,
                alpha: DEFAULT_ALPHA,
                seed: opts.points_seed,
            },
        )?;
        write_points4d(&file(Modality::Points4d, 0)?, &points)?;
        let mpath = dir.join(MANIFEST_FILE);
        write_manifest(&mpath, &manifest)?;
        manifests.push(mpath);
    }
    Ok(manifests)
}

/// A validated sequence on disk.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub manifest: SequenceManifest,
    pub base: PathBuf,
    pub manifest_path: PathBuf,
}

impl Sequence {
    /// Read the manifest and check that every referenced file exists.
    pub fn open(manifest_path: &Path) -> Result<Self> {
        let manifest = read_manifest(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
        manifest.validate(&base)?;
        Ok(Self {
            manifest,
            base,
            manifest_path: manifest_path.to_path_buf(),
        })
    }

    pub fn frame_count(&self) -> usize {
        self.manifest.frame_count
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.manifest.intrinsics
    }

    pub fn has(&self, m: Modality) -> bool {
        self.manifest.has(m)
    }

    /// Error naming the suite and the absent modality.
    pub fn require(&self, m: Modality, suite: &str) -> Result<()> {
        if self.has(m) {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "suite {suite} needs modality {} but {} does not provide it",
                m.name(),
                self.manifest_path.display()
            )))
        }
    }

    fn load<T: Send>(&self, m: Modality, read: impl Fn(&Path) -> Result<T> + Sync) -> Result<Vec<T>> {
        (0..m.file_count(self.frame_count()))
            .into_par_iter()
            .map(|t| {
                let p = self.manifest.path(&self.base, m, t)?;
                let value = read(&p)?;
                Ok(value)
            })
            .collect()
    }

    fn check_shape(&self, shape: (usize, usize), m: Modality, t: usize) -> Result<()> {
        if shape != self.manifest.shape() {
            return Err(Error::Validation(format!(
                "{} file {t} of {} is {}x{}, manifest says {}x{}",
                m.name(),
                self.manifest_path.display(),
                shape.0,
                shape.1,
                self.manifest.resolution[0],
                self.manifest.resolution[1]
            )));
        }
        Ok(())
    }

    fn load_checked<T: Send>(
        &self,
        m: Modality,
        read: impl Fn(&Path) -> Result<T> + Sync,
        shape: impl Fn(&T) -> (usize, usize),
    ) -> Result<Vec<T>> {
        let items = self.load(m, read)?;
        for (t, x) in items.iter().enumerate() {
            self.check_shape(shape(x), m, t)?;
        }
        Ok(items)
    }

    pub fn depths(&self) -> Result<Vec<DepthMap>> {
        self.load_checked(Modality::Depth, read_depth, DepthMap::shape)
    }

    pub fn rgbs(&self) -> Result<Vec<RgbFrame>> {
        self.load_checked(Modality::Rgb, read_rgb, RgbFrame::shape)
    }

    pub fn ids(&self) -> Result<Vec<Grid<u32>>> {
        self.load_checked(Modality::Ids, read_ids, Grid::shape)
    }

    /// `flows()[t]` maps frame t to t+1.
    pub fn flows(&self) -> Result<Vec<FlowField>> {
        self.load_checked(Modality::Flow, read_flow, FlowField::shape)
    }

    /// `flows_backward()[t]` maps frame t+1 to t.
    pub fn flows_backward(&self) -> Result<Vec<FlowField>> {
        self.load_checked(Modality::FlowBackward, read_flow, FlowField::shape)
    }

    pub fn occlusions(&self) -> Result<Vec<OcclusionMask>> {
        let masks: Vec<Mask> = self.load_checked(Modality::Occlusion, read_mask, Grid::shape)?;
        Ok(masks.into_iter().map(|occluded| OcclusionMask { occluded }).collect())
    }

    pub fn scene_flows(&self) -> Result<Vec<SceneFlowField>> {
        let items: Vec<SceneFlowField> = (0..Modality::SceneFlow.file_count(self.frame_count()))
            .into_par_iter()
            .map(|t| {
                let [x, y, z] = self.manifest.scene_flow_paths(&self.base, t)?;
                read_scene_flow([&x, &y, &z])
            })
            .collect::<Result<_>>()?;
        for (t, s) in items.iter().enumerate() {
            self.check_shape(s.shape(), Modality::SceneFlow, t)?;
        }
        Ok(items)
    }

    pub fn points4d(&self) -> Result<PointSet4D> {
        read_points4d(&self.manifest.path(&self.base, Modality::Points4d, 0)?)
    }
}
