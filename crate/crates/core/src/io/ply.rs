//! ASCII PLY for 4D point sets: float x, y, z (meters), uint tau (frame
//! index), with alpha (meters per frame) on a `comment alpha` header line.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point4D, PointSet4D};
use crate::io::{read_file, write_file};

const PROPERTIES: [&str; 4] = ["property float x", "property float y", "property float z", "property uint tau"];

/// Coordinates are stored as f32 in shortest round-trip form.
pub fn encode_points4d(set: &PointSet4D) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    writeln!(s, "comment alpha {}", set.alpha).unwrap();
    writeln!(s, "element vertex {}", set.len()).unwrap();
    for p in PROPERTIES {
        s.push_str(p);
        s.push('\n');
    }
    s.push_str("end_header\n");
    for p in &set.points {
        writeln!(s, "{} {} {} {}", p.x as f32, p.y as f32, p.z as f32, p.tau).unwrap();
    }
    s
}

pub fn decode_points4d(bytes: &[u8], path: &Path) -> Result<PointSet4D> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::format(path, e.valid_up_to() as u64, "PLY is not valid UTF-8 text"))?;
    let mut offset = 0u64;
    let mut lines = text.split_inclusive('\n').map(|l| {
        let at = offset;
        offset += l.len() as u64;
        (at, l.trim_end_matches(['\n', '\r']))
    });
    let mut expect = |want: &str| -> Result<u64> {
        match lines.next() {
            Some((at, l)) if l == want => Ok(at),
            Some((at, l)) => Err(Error::format(path, at, format!("expected \"{want}\", found \"{l}\""))),
            None => Err(Error::format(path, bytes.len() as u64, format!("missing \"{want}\""))),
        }
    };
    expect("ply")?;
    expect("format ascii 1.0")?;
    drop(expect);

    let mut header_value = |prefix: &str| -> Result<(u64, String)> {
        match lines.next() {
            Some((at, l)) => l
                .strip_prefix(prefix)
                .map(|v| (at, v.to_string()))
                .ok_or_else(|| Error::format(path, at, format!("expected \"{prefix}…\", found \"{l}\""))),
            None => Err(Error::format(path, bytes.len() as u64, format!("missing \"{prefix}…\""))),
        }
    };
    let (at, alpha) = header_value("comment alpha ")?;
    let alpha: f64 = alpha
        .parse()
        .map_err(|_| Error::format(path, at, format!("bad alpha \"{alpha}\"")))?;
    let (at, count) = header_value("element vertex ")?;
    let count: usize = count
        .parse()
        .map_err(|_| Error::format(path, at, format!("bad vertex count \"{count}\"")))?;
    for p in PROPERTIES.iter().chain(&["end_header"]) {
        let (at, rest) = header_value(p)?;
        if !rest.is_empty() {
            return Err(Error::format(path, at, format!("expected \"{p}\"")));
        }
    }

    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let Some((at, line)) = lines.next() else {
            return Err(Error::format(
                path,
                bytes.len() as u64,
                format!("expected {count} vertices, found {}", points.len()),
            ));
        };
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let bad = || Error::format(path, at, format!("malformed vertex \"{line}\""));
        if fields.len() != 4 {
            return Err(bad());
        }
        let c = |i: usize| fields[i].parse::<f32>().map_err(|_| bad());
        let (x, y, z) = (c(0)?, c(1)?, c(2)?);
        let tau: u32 = fields[3].parse().map_err(|_| bad())?;
        points.push(Point4D::new(x as f64, y as f64, z as f64, tau));
    }
    if let Some((at, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::format(path, at, "data after the declared vertices"));
    }
    PointSet4D::new(points, alpha).map_err(|e| Error::format(path, 0, e.to_string()))
}

pub fn write_points4d(path: &Path, set: &PointSet4D) -> Result<()> {
    write_file(path, encode_points4d(set).as_bytes())
}

pub fn read_points4d(path: &Path) -> Result<PointSet4D> {
    decode_points4d(&read_file(path)?, path)
}
