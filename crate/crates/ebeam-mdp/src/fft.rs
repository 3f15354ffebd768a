//! Internal 2-D FFT convolution on a zero-padded power-of-two grid.
//!
//! The kernel spectrum is computed once and cached, so repeated
//! convolutions (one per optimizer epoch) cost three transforms total.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::field::RasterField;

/// Smallest power of two that is at least `n`.
pub(crate) fn next_pow2_at_least(n: usize) -> usize {
    n.next_power_of_two()
}

fn transpose_square(src: &[Complex<f64>], dst: &mut [Complex<f64>], n: usize) {
    for j in 0..n {
        for i in 0..n {
            dst[i * n + j] = src[j * n + i];
        }
    }
}

/// In-place 2-D transform: 1-D FFTs over rows, then over columns (via a
/// transpose round trip through `scratch`). Row transforms are independent,
/// so parallelism cannot change the result.
fn fft_2d(
    data: &mut [Complex<f64>],
    scratch: &mut [Complex<f64>],
    n: usize,
    fft: &Arc<dyn Fft<f64>>,
) {
    data.par_chunks_mut(n).for_each(|row| fft.process(row));
    transpose_square(data, scratch, n);
    scratch.par_chunks_mut(n).for_each(|row| fft.process(row));
    transpose_square(scratch, data, n);
}

/// Circular convolution against a fixed kernel on a `pad` x `pad` grid,
/// applied to `crop` x `crop` fields (zero-padded in, cropped out).
pub(crate) struct Conv2d {
    pad: usize,
    crop: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kernel_spectrum: Vec<Complex<f64>>,
}

impl Conv2d {
    /// `kernel` must be square with power-of-two side and laid out wrapped
    /// at the origin (offset zero in the corner), the layout `build_psf`
    /// produces.
    pub fn new(kernel: &RasterField, crop: usize) -> Conv2d {
        let pad = kernel.width();
        assert!(pad.is_power_of_two(), "kernel side must be a power of two");
        assert_eq!(pad, kernel.height(), "kernel must be square");
        assert!(crop <= pad, "cropped size cannot exceed the padded grid");

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(pad);
        let inv = planner.plan_fft_inverse(pad);

        let mut spectrum: Vec<Complex<f64>> = kernel
            .as_slice()
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        let mut scratch = vec![Complex::new(0.0, 0.0); pad * pad];
        fft_2d(&mut spectrum, &mut scratch, pad, &fwd);

        Conv2d {
            pad,
            crop,
            fwd,
            inv,
            kernel_spectrum: spectrum,
        }
    }

    /// Convolves `field` with the cached kernel. The zero padding gives the
    /// circular convolution enough slack to act as a linear one for kernels
    /// that decay within the padding margin.
    pub fn convolve(&self, field: &RasterField) -> RasterField {
        assert_eq!(field.width(), self.crop);
        assert_eq!(field.height(), self.crop);
        let (pad, crop) = (self.pad, self.crop);

        let mut buf = vec![Complex::new(0.0, 0.0); pad * pad];
        for j in 0..crop {
            let row = field.row(j);
            for (i, &v) in row.iter().enumerate() {
                buf[j * pad + i] = Complex::new(v, 0.0);
            }
        }

        let mut scratch = vec![Complex::new(0.0, 0.0); pad * pad];
        fft_2d(&mut buf, &mut scratch, pad, &self.fwd);
        for (b, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *b *= *k;
        }
        fft_2d(&mut buf, &mut scratch, pad, &self.inv);

        let scale = 1.0 / (pad * pad) as f64;
        let mut out = RasterField::zeros(crop, crop);
        for j in 0..crop {
            let row = out.row_mut(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = buf[j * pad + i].re * scale;
            }
        }
        out
    }
}
