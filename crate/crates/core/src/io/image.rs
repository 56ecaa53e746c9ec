//! 8-bit PNG images: RGB frames, binary masks (0/255) and object-id rasters.

use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Decoder, Encoder, Transformations};

use crate::error::{Error, Result};
use crate::geometry::RgbFrame;
use crate::io::{read_file, write_file};
use crate::raster::{Grid, Mask};

fn encode_png(w: usize, h: usize, color: ColorType, data: &[u8], path: &Path) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, w as u32, h as u32);
    enc.set_color(color);
    enc.set_depth(BitDepth::Eight);
    let fail = |e: png::EncodingError| Error::format(path, 0, format!("png encoding failed: {e}"));
    let mut writer = enc.write_header().map_err(fail)?;
    writer.write_image_data(data).map_err(fail)?;
    writer.finish().map_err(fail)?;
    Ok(out)
}

fn decode_png(bytes: &[u8], color: ColorType, path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let fail = |e: png::DecodingError| Error::format(path, 0, format!("corrupt png: {e}"));
    let mut dec = Decoder::new(Cursor::new(bytes));
    dec.set_transformations(Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(fail)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, 0, "png too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(fail)?;
    if info.color_type != color || info.bit_depth != BitDepth::Eight {
        return Err(Error::format(
            path,
            0,
            format!(
                "expected 8-bit {color:?} png, found {:?}-bit {:?}",
                info.bit_depth, info.color_type
            ),
        ));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    buf.truncate(info.line_size * h);
    Ok((w, h, buf))
}

fn quantize(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_rgb(path: &Path, frame: &RgbFrame) -> Result<()> {
    let (w, h) = frame.shape();
    let [r, g, b] = frame.channels();
    let data: Vec<u8> = (0..w * h)
        .flat_map(|i| [r, g, b].map(|c| quantize(c.as_slice()[i])))
        .collect();
    write_file(path, &encode_png(w, h, ColorType::Rgb, &data, path)?)
}

pub fn read_rgb(path: &Path) -> Result<RgbFrame> {
    let (w, h, data) = decode_png(&read_file(path)?, ColorType::Rgb, path)?;
    let channel = |c: usize| Grid::from_vec(w, h, data.iter().skip(c).step_by(3).map(|&x| x as f64 / 255.0).collect());
    RgbFrame::new(channel(0)?, channel(1)?, channel(2)?)
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    let (w, h) = mask.shape();
    let data: Vec<u8> = mask.as_slice().iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_file(path, &encode_png(w, h, ColorType::Grayscale, &data, path)?)
}

/// Only 0 and 255 are accepted.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let (w, h, data) = decode_png(&read_file(path)?, ColorType::Grayscale, path)?;
    if let Some(i) = data.iter().position(|&x| x != 0 && x != 255) {
        return Err(Error::format(path, 0, format!("mask pixel {i} is {}, expected 0 or 255", data[i])));
    }
    Grid::from_vec(w, h, data.into_iter().map(|x| x == 255).collect())
}

pub fn write_ids(path: &Path, ids: &Grid<u32>) -> Result<()> {
    let (w, h) = ids.shape();
    let data = ids
        .as_slice()
        .iter()
        .map(|&id| u8::try_from(id).map_err(|_| Error::invalid(format!("object id {id} does not fit in 8 bits"))))
        .collect::<Result<Vec<u8>>>()?;
    write_file(path, &encode_png(w, h, ColorType::Grayscale, &data, path)?)
}

pub fn read_ids(path: &Path) -> Result<Grid<u32>> {
    let (w, h, data) = decode_png(&read_file(path)?, ColorType::Grayscale, path)?;
    Grid::from_vec(w, h, data.into_iter().map(u32::from).collect())
}
