//! Coarse shot-set initialization: decomposes a binary target mask into
//! non-overlapping axis-aligned rectangles, plus the inverse rasterization
//! used as the exactness oracle.

use crate::error::{Error, Result};
use crate::field::RasterField;
use crate::model::{Shot, ShotBounds, ShotSet};

/// A boolean pixel grid, stored bottom-up row-major like [`RasterField`].
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::invalid(format!(
                "mask payload length {} does not match {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    /// Thresholds a real-valued field: pixels at or above `threshold`
    /// become true.
    pub fn from_field(field: &RasterField, threshold: f64) -> Self {
        BinaryMask {
            width: field.width(),
            height: field.height(),
            bits: field.as_slice().iter().map(|&v| v >= threshold).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// 0/1-valued real field, for feeding the mask to the simulators.
    pub fn to_field(&self) -> RasterField {
        RasterField::from_vec(
            self.width,
            self.height,
            self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
        .expect("dimensions are consistent by construction")
    }
}

/// Splits a span of `total` pixels into the fewest pieces that all fit
/// within [min, max]: piece count ceil(total/max), sizes as equal as
/// possible. Fails when the equal split would drop below the minimum.
fn split_span(start: usize, total: usize, min: i64, max: i64, axis: &str) -> Result<Vec<(usize, usize)>> {
    let (min, max) = (min as usize, max as usize);
    if total < min {
        return Err(Error::Unfracturable(format!(
            "a mask region spans {total} pixels along {axis}, thinner than the {axis} minimum {min}"
        )));
    }
    let pieces = total.div_ceil(max);
    if total / pieces < min {
        return Err(Error::Unfracturable(format!(
            "a mask region spanning {total} pixels along {axis} cannot be split into pieces within [{min}, {max}]"
        )));
    }
    let base = total / pieces;
    let rem = total % pieces;
    let mut out = Vec::with_capacity(pieces);
    let mut at = start;
    for k in 0..pieces {
        let size = base + usize::from(k < rem);
        out.push((at, size));
        at += size;
    }
    Ok(out)
}

/// Maximal horizontal runs of true pixels in one row, left to right.
fn row_runs(mask: &BinaryMask, y: usize) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut x = 0;
    while x < mask.width {
        if mask.get(x, y) {
            let start = x;
            while x < mask.width && mask.get(x, y) {
                x += 1;
            }
            runs.push((start, x - start));
        } else {
            x += 1;
        }
    }
    runs
}

/// Decomposes a binary mask into non-overlapping rectangular shots whose
/// union reproduces the true pixels exactly.
///
/// Rows are scanned bottom-up; identical runs on consecutive rows merge
/// into maximal slabs, and any slab exceeding the width or height bounds
/// splits into a minimal grid of compliant pieces. Every returned shot is
/// active with the given dose. The scan order is fixed, so identical
/// inputs produce identical shot sequences.
pub fn fracture(mask: &BinaryMask, bounds: &ShotBounds, default_dose: f64) -> Result<ShotSet> {
    if mask.width == 0 || mask.height == 0 {
        return Err(Error::invalid("mask grid must be nonempty"));
    }
    if mask.width != mask.height {
        return Err(Error::invalid(format!(
            "mask grid must be square, got {}x{}",
            mask.width, mask.height
        )));
    }
    bounds.validate()?;

    // (x, width, bottom row) of slabs still growing upward.
    let mut open: Vec<(usize, usize, usize)> = Vec::new();
    let mut closed: Vec<(usize, usize, usize, usize)> = Vec::new();
    for y in 0..mask.height {
        let runs = row_runs(mask, y);
        let mut next_open = Vec::with_capacity(runs.len());
        for &(x, w) in &runs {
            match open.iter().find(|&&(ox, ow, _)| ox == x && ow == w) {
                Some(&(_, _, y0)) => next_open.push((x, w, y0)),
                None => next_open.push((x, w, y)),
            }
        }
        for &(x, w, y0) in &open {
            let carried = next_open
                .iter()
                .any(|&(nx, nw, ny0)| nx == x && nw == w && ny0 == y0);
            if !carried {
                closed.push((x, y0, w, y - y0));
            }
        }
        open = next_open;
    }
    for &(x, w, y0) in &open {
        closed.push((x, y0, w, mask.height - y0));
    }

    let mut shots = Vec::new();
    for (x, y, w, h) in closed {
        for (px, pw) in split_span(x, w, bounds.w_min, bounds.w_max, "width")? {
            for (py, ph) in split_span(y, h, bounds.h_min, bounds.h_max, "height")? {
                shots.push(Shot::new(
                    px as f64,
                    py as f64,
                    pw as f64,
                    ph as f64,
                    default_dose,
                    1.0,
                ));
            }
        }
    }
    Ok(ShotSet::new(shots, mask.width))
}

/// Paints every active shot's integer rectangle onto a fresh mask: a pixel
/// is true iff at least one active shot covers it. Shots are clipped to
/// the grid.
pub fn rasterize(shots: &ShotSet) -> BinaryMask {
    let m = shots.grid_size;
    let mut mask = BinaryMask::new(m, m);
    for s in shots.iter() {
        if s.q < 0.5 {
            continue;
        }
        let x0 = (s.x.max(0.0) as usize).min(m);
        let y0 = (s.y.max(0.0) as usize).min(m);
        let x1 = ((s.x + s.w).max(0.0) as usize).min(m);
        let y1 = ((s.y + s.h).max(0.0) as usize).min(m);
        for y in y0..y1 {
            for x in x0..x1 {
                mask.set(x, y, true);
            }
        }
    }
    mask
}
