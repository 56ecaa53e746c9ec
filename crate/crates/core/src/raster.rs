//! Dense row-major rasters and bilinear sampling.
//!
//! Pixel centers sit at integer coordinates `(u, v) = (column, row)` with
//! `(0, 0)` the top-left pixel center.

use crate::error::{Error, Result};

/// A `width × height` row-major raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "raster payload has {} entries, expected {}×{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < self.width && v < self.height);
        v * self.width + u
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> &T {
        &self.data[self.index(u, v)]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: T) {
        let i = self.index(u, v);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Iterate `(u, v, &value)` in row-major order.
    pub fn enumerate(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let w = self.width;
        self.data.iter().enumerate().map(move |(i, x)| (i % w, i / w, x))
    }
}

/// Boolean raster.
pub type Mask = Grid<bool>;

impl Mask {
    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        ensure_same_shape(self.shape(), other.shape())?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a && b).collect(),
        })
    }

    pub fn not(&self) -> Mask {
        self.map(|&b| !b)
    }
}

pub(crate) fn ensure_same_shape(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::ShapeMismatch { expected, actual });
    }
    Ok(())
}

/// Up to four bilinear taps with strictly positive weights.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Taps {
    pub idx: [usize; 4],
    pub weight: [f64; 4],
    pub len: usize,
}

impl Taps {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.idx[k], self.weight[k]))
    }
}

/// Bilinear footprint of `(x, y)`; `None` when any tap with non-zero weight
/// falls outside the raster. Zero-weight taps are dropped, so integer
/// positions resolve to exactly one tap of weight 1.
pub(crate) fn bilinear_taps(x: f64, y: f64, width: usize, height: usize) -> Option<Taps> {
    if !x.is_finite() || !y.is_finite() || width == 0 || height == 0 {
        return None;
    }
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    if x0 < 0.0 || y0 < 0.0 {
        return None;
    }
    let (x0, y0) = (x0 as usize, y0 as usize);
    if x0 >= width || y0 >= height {
        return None;
    }
    let need_x1 = fx > 0.0;
    let need_y1 = fy > 0.0;
    if (need_x1 && x0 + 1 >= width) || (need_y1 && y0 + 1 >= height) {
        return None;
    }
    let mut taps = Taps {
        idx: [0; 4],
        weight: [0.0; 4],
        len: 0,
    };
    let mut push = |u: usize, v: usize, w: f64| {
        if w > 0.0 {
            taps.idx[taps.len] = v * width + u;
            taps.weight[taps.len] = w;
            taps.len += 1;
        }
    };
    push(x0, y0, (1.0 - fx) * (1.0 - fy));
    if need_x1 {
        push(x0 + 1, y0, fx * (1.0 - fy));
    }
    if need_y1 {
        push(x0, y0 + 1, (1.0 - fx) * fy);
    }
    if need_x1 && need_y1 {
        push(x0 + 1, y0 + 1, fx * fy);
    }
    Some(taps)
}

/// Bilinear sample requiring every tap to be in-bounds and valid.
pub(crate) fn sample_strict(values: &[f64], valid: &[bool], taps: &Taps) -> Option<f64> {
    let mut acc = 0.0;
    for (i, w) in taps.iter() {
        if !valid[i] {
            return None;
        }
        acc += w * values[i];
    }
    Some(acc)
}

/// Bilinear sample over the valid taps only, renormalised by their weight.
pub(crate) fn sample_valid_taps(values: &[f64], valid: &[bool], taps: &Taps) -> Option<f64> {
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (i, w) in taps.iter() {
        if valid[i] {
            acc += w * values[i];
            wsum += w;
        }
    }
    if wsum > 0.0 {
        Some(if wsum == 1.0 { acc } else { acc / wsum })
    } else {
        None
    }
}
