//! Dense 2-D raster of real values.
//!
//! Rows are stored bottom-up: index `(x, y)` maps to `values[y * width + x]`
//! with `y = 0` the bottom row, matching the shot coordinate convention
//! (a shot's `y` is its bottom edge). Pixel `(i, j)` samples the continuous
//! plane at the cell center `(i + 0.5, j + 0.5)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RasterField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl RasterField {
    pub fn zeros(width: usize, height: usize) -> Self {
        RasterField {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "raster payload length {} does not match {}x{}",
                values.len(),
                width,
                height
            )));
        }
        Ok(RasterField {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        RasterField {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, x: usize, y: usize) -> &mut f64 {
        debug_assert!(x < self.width && y < self.height);
        &mut self.values[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.values[y * self.width..(y + 1) * self.width]
    }

    pub fn row_mut(&mut self, y: usize) -> &mut [f64] {
        &mut self.values[y * self.width..(y + 1) * self.width]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Largest absolute pixel difference between two same-sized fields.
    pub fn max_abs_diff(&self, other: &RasterField) -> f64 {
        assert_eq!(self.width, other.width);
        assert_eq!(self.height, other.height);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn same_size(&self, other: &RasterField) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn require_same_size(&self, other: &RasterField, context: &'static str) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.width, self.height),
                actual: format!("{}x{}", other.width, other.height),
                context,
            })
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RasterField {
        RasterField {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pixel-wise combination of two same-sized fields.
    pub fn zip_map(&self, other: &RasterField, f: impl Fn(f64, f64) -> f64) -> RasterField {
        assert!(self.same_size(other));
        RasterField {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Sum of pixel-wise products with a same-sized field.
    pub fn dot(&self, other: &RasterField) -> f64 {
        assert!(self.same_size(other));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &RasterField) {
        assert!(self.same_size(other));
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}
