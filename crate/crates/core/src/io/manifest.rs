//! Per-sequence JSON manifest: geometry, cameras, modality file patterns
//! and provenance.
//!
//! Per-frame patterns contain `{frame}`, replaced by the zero-padded
//! five-digit frame index. The scene-flow pattern also contains `{axis}`
//! (`x`, `y` or `z`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, CameraPose, Mat3, Vec3};
use crate::io::{read_file, write_file};
use crate::synth::{CameraMode, SceneSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const FRAME_PLACEHOLDER: &str = "{frame}";
pub const AXIS_PLACEHOLDER: &str = "{axis}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length: String,
    pub flow: String,
    pub time: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            length: "meters".into(),
            flow: "pixels".into(),
            time: "frames".into(),
        }
    }
}

/// World → camera transform of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extrinsics {
    pub frame: usize,
    /// Row-major rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl Extrinsics {
    pub fn from_pose(frame: usize, pose: &CameraPose) -> Self {
        let r = pose.rotation();
        let t = pose.translation();
        Self {
            frame,
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: [t.x, t.y, t.z],
        }
    }

    pub fn pose(&self) -> Result<CameraPose> {
        let r = Mat3::from_fn(|i, j| self.rotation[i][j]);
        CameraPose::new(r, Vec3::from(self.translation))
    }
}

/// File patterns, relative to the manifest directory. Absent modalities are omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modalities {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rgb: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<String>,
    /// Frame t → t+1, stored at index t.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<String>,
    /// Frame t+1 → t on frame t+1's grid, stored at index t.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_backward: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_flow: Option<String>,
    /// Pixels of frame t whose surface is hidden or off-raster at t+1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occlusion: Option<String>,
    /// Single file holding every frame's points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points4d: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Rgb,
    Depth,
    Ids,
    Flow,
    FlowBackward,
    SceneFlow,
    Occlusion,
    Points4d,
}

impl Modality {
    pub const ALL: [Modality; 8] = [
        Modality::Rgb,
        Modality::Depth,
        Modality::Ids,
        Modality::Flow,
        Modality::FlowBackward,
        Modality::SceneFlow,
        Modality::Occlusion,
        Modality::Points4d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Rgb => "rgb",
            Modality::Depth => "depth",
            Modality::Ids => "ids",
            Modality::Flow => "flow",
            Modality::FlowBackward => "flow_backward",
            Modality::SceneFlow => "scene_flow",
            Modality::Occlusion => "occlusion",
            Modality::Points4d => "points4d",
        }
    }

    /// Number of indexed files for a sequence of `frame_count` frames.
    pub fn file_count(self, frame_count: usize) -> usize {
        match self {
            Modality::Rgb | Modality::Depth | Modality::Ids => frame_count,
            Modality::Flow | Modality::FlowBackward | Modality::SceneFlow | Modality::Occlusion => {
                frame_count.saturating_sub(1)
            }
            Modality::Points4d => 1,
        }
    }
}

impl Modalities {
    pub fn pattern(&self, m: Modality) -> Option<&str> {
        match m {
            Modality::Rgb => self.rgb.as_deref(),
            Modality::Depth => self.depth.as_deref(),
            Modality::Ids => self.ids.as_deref(),
            Modality::Flow => self.flow.as_deref(),
            Modality::FlowBackward => self.flow_backward.as_deref(),
            Modality::SceneFlow => self.scene_flow.as_deref(),
            Modality::Occlusion => self.occlusion.as_deref(),
            Modality::Points4d => self.points4d.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Provenance {
    Synthetic {
        generator: String,
        seed: Option<u64>,
        view: usize,
        camera: CameraMode,
        /// Tangential velocity model applied at ground contacts.
        friction_model: String,
        spec: SceneSpec,
    },
    External {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceManifest {
    pub schema_version: u32,
    pub frame_count: usize,
    pub fps: f64,
    /// `[width, height]`.
    pub resolution: [usize; 2],
    pub units: Units,
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: Vec<Extrinsics>,
    pub modalities: Modalities,
    pub provenance: Provenance,
}

impl SequenceManifest {
    pub fn shape(&self) -> (usize, usize) {
        (self.resolution[0], self.resolution[1])
    }

    pub fn has(&self, m: Modality) -> bool {
        self.modalities.pattern(m).is_some()
    }

    pub fn poses(&self) -> Result<Vec<CameraPose>> {
        self.extrinsics.iter().map(Extrinsics::pose).collect()
    }

    /// Path of file `index` of modality `m`, relative to `base`.
    pub fn path(&self, base: &Path, m: Modality, index: usize) -> Result<PathBuf> {
        let pattern = self
            .modalities
            .pattern(m)
            .ok_or_else(|| Error::Validation(format!("modality {} is not present", m.name())))?;
        Ok(base.join(pattern.replace(FRAME_PLACEHOLDER, &format!("{index:05}"))))
    }

    /// The three scene-flow axis files of index `index`.
    pub fn scene_flow_paths(&self, base: &Path, index: usize) -> Result<[PathBuf; 3]> {
        let p = self.path(base, Modality::SceneFlow, index)?;
        let s = p.to_string_lossy();
        Ok(["x", "y", "z"].map(|a| PathBuf::from(s.replace(AXIS_PLACEHOLDER, a))))
    }

    /// Every file the manifest references, grouped by modality.
    pub fn referenced_files(&self, base: &Path) -> Result<Vec<(Modality, PathBuf)>> {
        let mut out = Vec::new();
        for m in Modality::ALL {
            if !self.has(m) {
                continue;
            }
            for i in 0..m.file_count(self.frame_count) {
                if m == Modality::SceneFlow {
                    out.extend(self.scene_flow_paths(base, i)?.map(|p| (m, p)));
                } else {
                    out.push((m, self.path(base, m, i)?));
                }
            }
        }
        Ok(out)
    }

    /// Structural checks only.
    pub fn validate_structure(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if self.schema_version != SCHEMA_VERSION {
            return fail(unsupported_version(self.schema_version as u64));
        }
        if self.frame_count == 0 {
            return fail("frame_count must be ≥ 1".into());
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return fail(format!("fps must be > 0, got {}", self.fps));
        }
        self.intrinsics
            .validate()
            .map_err(|e| Error::Validation(format!("intrinsics: {e}")))?;
        if self.intrinsics.shape() != self.shape() {
            return fail(format!(
                "resolution {:?} disagrees with intrinsics {}x{}",
                self.resolution, self.intrinsics.width, self.intrinsics.height
            ));
        }
        if self.units != Units::default() {
            return fail(format!("unsupported units {:?}", self.units));
        }
        if self.extrinsics.len() != self.frame_count {
            return fail(format!(
                "{} extrinsics for {} frames",
                self.extrinsics.len(),
                self.frame_count
            ));
        }
        for (i, e) in self.extrinsics.iter().enumerate() {
            if e.frame != i {
                return fail(format!("extrinsics entry {i} is for frame {}; frames must be contiguous from 0", e.frame));
            }
            e.pose().map_err(|err| Error::Validation(format!("extrinsics of frame {i}: {err}")))?;
        }
        for m in Modality::ALL {
            let Some(p) = self.modalities.pattern(m) else { continue };
            let per_frame = m != Modality::Points4d;
            if per_frame != p.contains(FRAME_PLACEHOLDER) {
                return fail(format!(
                    "pattern for {} must {}contain {FRAME_PLACEHOLDER}: \"{p}\"",
                    m.name(),
                    if per_frame { "" } else { "not " }
                ));
            }
            if (m == Modality::SceneFlow) != p.contains(AXIS_PLACEHOLDER) {
                return fail(format!("only the scene_flow pattern carries {AXIS_PLACEHOLDER}: \"{p}\""));
            }
        }
        Ok(())
    }

    /// Structural checks plus existence of every referenced file.
    pub fn validate(&self, base: &Path) -> Result<()> {
        self.validate_structure()?;
        for (m, p) in self.referenced_files(base)? {
            if !p.is_file() {
                return Err(Error::Validation(format!("missing {} file: {}", m.name(), p.display())));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::format(path, json_offset(text, &e), e.to_string()))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(Error::Validation(format!("{}: {}", path.display(), unsupported_version(v)))),
            None => return Err(Error::format(path, 0, "missing integer schema_version")),
        }
        serde_json::from_value(value).map_err(|e| Error::format(path, 0, e.to_string()))
    }
}

fn unsupported_version(v: u64) -> String {
    format!("unsupported manifest schema_version {v}; this build reads version {SCHEMA_VERSION}")
}

fn json_offset(text: &str, e: &serde_json::Error) -> u64 {
    let line_start: usize = text.split_inclusive('\n').take(e.line().saturating_sub(1)).map(str::len).sum();
    (line_start + e.column().saturating_sub(1)) as u64
}

pub fn write_manifest(path: &Path, m: &SequenceManifest) -> Result<()> {
    write_file(path, m.to_json().as_bytes())
}

/// Parses and checks structure; file existence is checked by [`SequenceManifest::validate`].
pub fn read_manifest(path: &Path) -> Result<SequenceManifest> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::format(path, e.valid_up_to() as u64, "not UTF-8"))?;
    let m = SequenceManifest::from_json(text, path)?;
    m.validate_structure()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> SequenceManifest {
        let k = CameraIntrinsics::from_hfov(1.0, 8, 6).unwrap();
        let pose = CameraPose::look_at(Vec3::new(0.0, 1.0, -2.0), Vec3::zeros(), Vec3::y()).unwrap();
        SequenceManifest {
            schema_version: SCHEMA_VERSION,
            frame_count: 3,
            fps: 24.0,
            resolution: [8, 6],
            units: Units::default(),
            intrinsics: k,
            extrinsics: (0..3).map(|i| Extrinsics::from_pose(i, &pose)).collect(),
            modalities: Modalities {
                depth: Some("depth/{frame}.d4df".into()),
                flow: Some("flow/{frame}.flo".into()),
                scene_flow: Some("scene_flow/{frame}_{axis}.d4df".into()),
                ..Default::default()
            },
            provenance: Provenance::External { description: None },
        }
    }

    #[test]
    fn json_round_trip_and_stable_order() {
        let m = sample();
        let text = m.to_json();
        let back = SequenceManifest::from_json(&text, Path::new("m.json")).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
        let keys: Vec<usize> = ["schema_version", "frame_count", "fps", "resolution", "units", "intrinsics"]
            .iter()
            .map(|k| text.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(back.poses().unwrap()[1], m.extrinsics[1].pose().unwrap());
    }

    #[test]
    fn version_bump_rejected() {
        let text = sample().to_json().replace("\"schema_version\": 1", "\"schema_version\": 2");
        let err = SequenceManifest::from_json(&text, Path::new("m.json")).unwrap_err();
        assert!(err.to_string().contains("schema_version 2"), "{err}");
    }

    #[test]
    fn missing_file_named() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample();
        let err = m.validate(dir.path()).unwrap_err().to_string();
        assert!(err.contains("depth/00000.d4df"), "{err}");
        assert_eq!(m.referenced_files(dir.path()).unwrap().len(), 3 + 2 + 6);
    }

    #[test]
    fn structural_errors() {
        let mut m = sample();
        m.extrinsics[2].frame = 5;
        assert!(m.validate_structure().is_err());
        let mut m = sample();
        m.modalities.rgb = Some("rgb.png".into());
        assert!(m.validate_structure().is_err());
        let mut m = sample();
        m.resolution = [6, 8];
        assert!(m.validate_structure().is_err());
    }
}
