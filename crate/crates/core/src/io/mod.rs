//! On-disk formats: depth/scene-flow containers, `.flo` optical flow, PNG
//! images and masks, ASCII PLY 4D point sets, sequence manifests and metric
//! reports. All binary encodings are little-endian.

mod depth;
mod flo;
mod image;
pub mod manifest;
mod ply;
pub mod report;

pub use depth::{
    decode_depth, decode_raster, encode_depth, encode_raster, read_depth, read_raster, read_scene_flow, write_depth,
    write_raster, write_scene_flow, DEPTH_HEADER_LEN, DEPTH_MAGIC, DEPTH_VERSION,
};
pub use flo::{decode_flow, encode_flow, read_flow, write_flow, FLO_INVALID, FLO_INVALID_THRESHOLD, FLO_MAGIC};
pub use image::{read_ids, read_mask, read_rgb, write_ids, write_mask, write_rgb};
pub use manifest::{read_manifest, write_manifest, Extrinsics, Modalities, Modality, Provenance, SequenceManifest, Units, SCHEMA_VERSION};
pub use ply::{decode_points4d, encode_points4d, read_points4d, write_points4d};
pub use report::{aggregate, read_report, write_report, AggregateReport, MetricsReport, SuiteReport, TOOL_NAME, TOOL_VERSION};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
