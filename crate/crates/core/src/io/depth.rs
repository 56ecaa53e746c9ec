//! `D4DF` float raster container, used for depth and for each scene-flow axis.
//!
//! ```text
//! offset 0   b"D4DF"
//! offset 4   u32 version (= 1)
//! offset 8   u32 width
//! offset 12  u32 height
//! offset 16  height × width f32, row-major; NaN marks an invalid pixel
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, SceneFlowField};
use crate::io::{read_file, write_file};
use crate::raster::{Grid, Mask};

pub const DEPTH_MAGIC: &[u8; 4] = b"D4DF";
pub const DEPTH_VERSION: u32 = 1;
pub const DEPTH_HEADER_LEN: usize = 16;

fn u32_at(bytes: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes"))
}

pub fn encode_raster(values: &Grid<f64>, valid: &Mask) -> Vec<u8> {
    let (w, h) = values.shape();
    let mut out = Vec::with_capacity(DEPTH_HEADER_LEN + 4 * w * h);
    out.extend_from_slice(DEPTH_MAGIC);
    out.extend_from_slice(&DEPTH_VERSION.to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    for (&v, &ok) in values.as_slice().iter().zip(valid.as_slice()) {
        let x = if ok { v as f32 } else { f32::NAN };
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Decode a container; invalid pixels carry NaN in the returned values.
pub fn decode_raster(bytes: &[u8], path: &Path) -> Result<(Grid<f64>, Mask)> {
    if bytes.len() < DEPTH_HEADER_LEN {
        return Err(Error::format(
            path,
            bytes.len() as u64,
            format!("truncated header: {} of {DEPTH_HEADER_LEN} bytes", bytes.len()),
        ));
    }
    if &bytes[0..4] != DEPTH_MAGIC {
        return Err(Error::format(path, 0, format!("bad magic {:?}, expected \"D4DF\"", &bytes[0..4])));
    }
    let version = u32_at(bytes, 4);
    if version != DEPTH_VERSION {
        return Err(Error::format(path, 4, format!("unsupported version {version}, expected {DEPTH_VERSION}")));
    }
    let (w, h) = (u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize);
    if w == 0 || h == 0 {
        return Err(Error::format(path, 8, format!("empty raster {w}x{h}")));
    }
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(DEPTH_HEADER_LEN))
        .ok_or_else(|| Error::format(path, 8, format!("raster {w}x{h} too large")))?;
    if bytes.len() < expected {
        return Err(Error::format(
            path,
            bytes.len() as u64,
            format!("truncated payload: {} of {expected} bytes", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format(path, expected as u64, "trailing bytes after payload"));
    }
    let mut values = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for (i, chunk) in bytes[DEPTH_HEADER_LEN..].chunks_exact(4).enumerate() {
        let x = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if x.is_infinite() {
            return Err(Error::format(path, (DEPTH_HEADER_LEN + 4 * i) as u64, "infinite value"));
        }
        values.push(x as f64);
        valid.push(!x.is_nan());
    }
    Ok((Grid::from_vec(w, h, values)?, Grid::from_vec(w, h, valid)?))
}

pub fn encode_depth(depth: &DepthMap) -> Vec<u8> {
    encode_raster(&depth.values, &depth.valid)
}

/// Valid entries must be strictly positive.
pub fn decode_depth(bytes: &[u8], path: &Path) -> Result<DepthMap> {
    let (values, valid) = decode_raster(bytes, path)?;
    if let Some(i) = values.as_slice().iter().position(|&d| d <= 0.0) {
        return Err(Error::format(
            path,
            (DEPTH_HEADER_LEN + 4 * i) as u64,
            format!("non-positive depth {}", values.as_slice()[i]),
        ));
    }
    DepthMap::new(values, valid)
}

pub fn write_raster(path: &Path, values: &Grid<f64>, valid: &Mask) -> Result<()> {
    write_file(path, &encode_raster(values, valid))
}

pub fn read_raster(path: &Path) -> Result<(Grid<f64>, Mask)> {
    decode_raster(&read_file(path)?, path)
}

pub fn write_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    write_file(path, &encode_depth(depth))
}

pub fn read_depth(path: &Path) -> Result<DepthMap> {
    decode_depth(&read_file(path)?, path)
}

/// One container per axis, in x, y, z order.
pub fn write_scene_flow(paths: [&Path; 3], flow: &SceneFlowField) -> Result<()> {
    for (path, grid) in paths.into_iter().zip([&flow.dx, &flow.dy, &flow.dz]) {
        write_raster(path, grid, &flow.valid)?;
    }
    Ok(())
}

pub fn read_scene_flow(paths: [&Path; 3]) -> Result<SceneFlowField> {
    let [x, y, z] = paths.map(read_raster);
    let ((dx, valid), (dy, vy), (dz, vz)) = (x?, y?, z?);
    for (path, (other, g)) in [(paths[1], (&vy, &dy)), (paths[2], (&vz, &dz))] {
        if g.shape() != dx.shape() {
            return Err(Error::format(path, 8, "scene-flow axes disagree on raster size"));
        }
        if let Some(i) = other.as_slice().iter().zip(valid.as_slice()).position(|(a, b)| a != b) {
            return Err(Error::format(
                path,
                (DEPTH_HEADER_LEN + 4 * i) as u64,
                "validity differs from the x axis",
            ));
        }
    }
    SceneFlowField::new(dx, dy, dz, valid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.d4df")
    }

    #[test]
    fn golden_2x2() {
        // hand-assembled: 1.0, 2.5 / NaN, 0.125
        let mut bytes = b"D4DF".to_vec();
        bytes.extend([1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0]);
        bytes.extend([0x00, 0x00, 0x80, 0x3f]);
        bytes.extend([0x00, 0x00, 0x20, 0x40]);
        bytes.extend([0x00, 0x00, 0xc0, 0x7f]);
        bytes.extend([0x00, 0x00, 0x00, 0x3e]);
        let d = decode_depth(&bytes, p()).unwrap();
        assert_eq!(d.at(0, 0), Some(1.0));
        assert_eq!(d.at(1, 0), Some(2.5));
        assert_eq!(d.at(0, 1), None);
        assert_eq!(d.at(1, 1), Some(0.125));
        assert_eq!(encode_depth(&d), bytes);
    }

    #[test]
    fn errors_carry_offsets() {
        let d = DepthMap::constant(3, 2, 1.5);
        let good = encode_depth(&d);
        let offset = |bytes: &[u8]| match decode_depth(bytes, p()) {
            Err(Error::Format { offset, .. }) => offset,
            other => panic!("expected format error, got {other:?}"),
        };
        assert_eq!(offset(&good[..good.len() - 1]), good.len() as u64 - 1);
        assert_eq!(offset(&good[..10]), 10);
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(offset(&bad), 0);
        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(offset(&bad), 4);
        let mut bad = good.clone();
        bad[DEPTH_HEADER_LEN + 4..DEPTH_HEADER_LEN + 8].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert_eq!(offset(&bad), DEPTH_HEADER_LEN as u64 + 4);
        let mut long = good.clone();
        long.push(0);
        assert_eq!(offset(&long), good.len() as u64);
    }
}
