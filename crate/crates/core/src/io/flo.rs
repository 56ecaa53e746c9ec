//! Middlebury `.flo`: f32 magic 202021.25, i32 width, i32 height, then
//! interleaved (du, dv) f32 pairs row-major. Components above 1e9 in
//! magnitude mark unknown flow.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::FlowField;
use crate::io::{read_file, write_file};
use crate::raster::Grid;

pub const FLO_MAGIC: f32 = 202021.25;
pub const FLO_INVALID_THRESHOLD: f32 = 1e9;
/// Written for both components of an invalid pixel.
pub const FLO_INVALID: f32 = 1e10;
const HEADER_LEN: usize = 12;

pub fn encode_flow(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * w * h);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for i in 0..w * h {
        let (u, v) = if flow.valid.as_slice()[i] {
            (flow.du.as_slice()[i] as f32, flow.dv.as_slice()[i] as f32)
        } else {
            (FLO_INVALID, FLO_INVALID)
        };
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Invalid pixels decode to NaN components.
pub fn decode_flow(bytes: &[u8], path: &Path) -> Result<FlowField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(path, bytes.len() as u64, "truncated header"));
    }
    let word = |off: usize| -> [u8; 4] { bytes[off..off + 4].try_into().expect("4 bytes") };
    let magic = f32::from_le_bytes(word(0));
    if magic != FLO_MAGIC {
        return Err(Error::format(path, 0, format!("bad magic {magic}, expected {FLO_MAGIC}")));
    }
    let (w, h) = (i32::from_le_bytes(word(4)), i32::from_le_bytes(word(8)));
    if w <= 0 || h <= 0 {
        return Err(Error::format(path, 4, format!("invalid dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = HEADER_LEN + 8 * w * h;
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
    let (mut du, mut dv, mut valid) = (Vec::with_capacity(w * h), Vec::with_capacity(w * h), Vec::with_capacity(w * h));
    for i in 0..w * h {
        let off = HEADER_LEN + 8 * i;
        let (u, v) = (f32::from_le_bytes(word(off)), f32::from_le_bytes(word(off + 4)));
        if u.is_nan() || v.is_nan() {
            return Err(Error::format(path, off as u64, "NaN flow component"));
        }
        let ok = u.abs() <= FLO_INVALID_THRESHOLD && v.abs() <= FLO_INVALID_THRESHOLD;
        du.push(if ok { u as f64 } else { f64::NAN });
        dv.push(if ok { v as f64 } else { f64::NAN });
        valid.push(ok);
    }
    FlowField::new(Grid::from_vec(w, h, du)?, Grid::from_vec(w, h, dv)?, Grid::from_vec(w, h, valid)?)
}

pub fn write_flow(path: &Path, flow: &FlowField) -> Result<()> {
    write_file(path, &encode_flow(flow))
}

pub fn read_flow(path: &Path) -> Result<FlowField> {
    decode_flow(&read_file(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_header_and_sentinel() {
        // 3x1: (0.5, -1), unknown, (2, 0)
        // 202021.25 as little-endian f32 spells "PIEH"
        let mut bytes = vec![b'P', b'I', b'E', b'H', 3, 0, 0, 0, 1, 0, 0, 0];
        for x in [0.5f32, -1.0, 1e10, 1e10, 2.0, 0.0] {
            bytes.extend(x.to_le_bytes());
        }
        let f = decode_flow(&bytes, Path::new("g.flo")).unwrap();
        assert_eq!(f.shape(), (3, 1));
        assert_eq!(f.valid.as_slice(), &[true, false, true]);
        assert_eq!((*f.du.get(0, 0), *f.dv.get(0, 0)), (0.5, -1.0));
        assert_eq!(encode_flow(&f), bytes);
    }

    #[test]
    fn rejects_wrong_magic_and_truncation() {
        let bytes = encode_flow(&FlowField::zeros(2, 2));
        let mut bad = bytes.clone();
        bad[0] ^= 1;
        assert!(matches!(decode_flow(&bad, Path::new("x")), Err(Error::Format { offset: 0, .. })));
        assert!(matches!(
            decode_flow(&bytes[..bytes.len() - 3], Path::new("x")),
            Err(Error::Format { .. })
        ));
    }
}
