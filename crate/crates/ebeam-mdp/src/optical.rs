//! Differentiable optical-projection stage for wafer-level optimization:
//! target retargeting, the 4x mask/wafer scale change, a Gaussian aerial
//! image with a sigmoid print model evaluated at three dose corners, and
//! the matching backward pass down to the mask-level resist image.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::logistic;
use crate::fft::{next_pow2_at_least, Conv2d};
use crate::field::RasterField;
use crate::loss::CornerGrads;
use crate::model::OlParams;

/// Wafer prints at the three dose corners. The corners shift the print
/// threshold by `(1 + s*dose_delta)` with `s = +1, 0, -1`, so prints are
/// ordered inner <= nominal <= outer pixel-wise.
#[derive(Debug, Clone)]
pub struct CornerSet {
    pub inner: RasterField,
    pub nominal: RasterField,
    pub outer: RasterField,
}

/// Replicates every pixel into a 4x4 block, taking a wafer-scale pattern
/// to mask scale.
pub fn magnify_4x(wafer: &RasterField) -> RasterField {
    let (w, h) = (wafer.width(), wafer.height());
    let mut out = RasterField::zeros(4 * w, 4 * h);
    for j in 0..4 * h {
        let row = out.row_mut(j);
        for (i, v) in row.iter_mut().enumerate() {
            *v = wafer.at(i / 4, j / 4);
        }
    }
    out
}

/// Averages every 4x4 block into one pixel, taking a mask-scale field to
/// wafer scale.
///
/// Backward contract: the gradient of each output pixel spreads uniformly
/// (x 1/16) over its source block — see [`reduce_4x_adjoint`].
pub fn reduce_4x(mask_level: &RasterField) -> Result<RasterField> {
    let (w, h) = (mask_level.width(), mask_level.height());
    if w % 4 != 0 || h % 4 != 0 {
        return Err(Error::invalid(format!(
            "field of {w}x{h} cannot reduce 4x: sides must be divisible by 4"
        )));
    }
    let mut out = RasterField::zeros(w / 4, h / 4);
    for j in 0..h / 4 {
        for i in 0..w / 4 {
            let mut acc = 0.0;
            for jj in 0..4 {
                for ii in 0..4 {
                    acc += mask_level.at(4 * i + ii, 4 * j + jj);
                }
            }
            *out.at_mut(i, j) = acc / 16.0;
        }
    }
    Ok(out)
}

/// Adjoint of [`reduce_4x`]: spreads each wafer-scale gradient pixel
/// uniformly over its 4x4 mask-scale source block.
pub fn reduce_4x_adjoint(upstream: &RasterField) -> RasterField {
    magnify_4x(upstream).map(|v| v / 16.0)
}

/// Low-pass retargeting of a wafer target: Gaussian blur with `sigma_cdr`
/// followed by re-thresholding at 0.5, rounding off corners sharper than
/// either projection stage can print. `sigma_cdr = 0` is the identity.
pub fn cdr_retarget(target: &RasterField, sigma_cdr: f64) -> RasterField {
    assert!(sigma_cdr >= 0.0, "retarget blur must be nonnegative");
    if sigma_cdr == 0.0 {
        return target.clone();
    }
    assert_eq!(target.width(), target.height(), "target grid must be square");
    let m = target.width();
    let conv = Conv2d::new(&gaussian_kernel(m, sigma_cdr), m);
    conv.convolve(target)
        .map(|v| if v >= 0.5 { 1.0 } else { 0.0 })
}

/// Point-sampled unit-mass Gaussian `exp(-r^2 / sigma^2)` on a padded
/// grid, wrapped at the origin, normalized so the discrete taps sum to 1
/// exactly — constants pass through the convolution unchanged.
fn gaussian_kernel(grid: usize, sigma: f64) -> RasterField {
    let pad = next_pow2_at_least(grid + 8 * sigma.ceil() as usize);
    let mut kernel = RasterField::zeros(pad, pad);
    let offset = |i: usize| -> f64 {
        if i <= pad / 2 {
            i as f64
        } else {
            i as f64 - pad as f64
        }
    };
    kernel
        .as_mut_slice()
        .par_chunks_mut(pad)
        .enumerate()
        .for_each(|(j, row)| {
            let dy = offset(j);
            for (i, v) in row.iter_mut().enumerate() {
                let dx = offset(i);
                *v = f64::exp(-(dx * dx + dy * dy) / (sigma * sigma));
            }
        });
    let mass = kernel.sum();
    kernel.scale(1.0 / mass);
    kernel
}

/// The aerial-image and print stage on a fixed wafer grid. Holds the
/// planned blur convolution so repeated epochs reuse it.
pub struct OpticalModel {
    wafer_grid: usize,
    ol: OlParams,
    conv: Conv2d,
}

impl OpticalModel {
    /// Plans the blur for a `wafer_grid` x `wafer_grid` print. Padding
    /// follows the exposure fast path: next power of two at or above
    /// `wafer_grid + 8 * ceil(sigma_o)`.
    pub fn new(wafer_grid: usize, ol: &OlParams) -> OpticalModel {
        assert!(wafer_grid > 0);
        OpticalModel {
            wafer_grid,
            ol: *ol,
            conv: Conv2d::new(&gaussian_kernel(wafer_grid, ol.sigma_o), wafer_grid),
        }
    }

    pub fn wafer_grid(&self) -> usize {
        self.wafer_grid
    }

    /// Aerial intensity: unit-mass Gaussian blur of the reduced resist
    /// image. The kernel is even, so this operator is its own adjoint.
    pub fn aerial(&self, z_e_reduced: &RasterField) -> RasterField {
        assert_eq!(z_e_reduced.width(), self.wafer_grid);
        assert_eq!(z_e_reduced.height(), self.wafer_grid);
        self.conv.convolve(z_e_reduced)
    }

    /// Wafer prints at the three dose corners:
    /// `logistic(theta_p * (I - i_th * (1 + s * dose_delta)))` with
    /// `s = +1` (inner), `0` (nominal), `-1` (outer).
    pub fn print(&self, z_e_reduced: &RasterField) -> CornerSet {
        let aerial = self.aerial(z_e_reduced);
        let corner = |s: f64| -> RasterField {
            let threshold = self.ol.i_th * (1.0 + s * self.ol.dose_delta);
            aerial.map(|i| logistic(self.ol.theta_p * (i - threshold)))
        };
        CornerSet {
            inner: corner(1.0),
            nominal: corner(0.0),
            outer: corner(-1.0),
        }
    }

    /// Backward pass of `reduce_4x -> aerial -> print`: chains each
    /// corner's sigmoid derivative, one shared self-adjoint blur, and the
    /// uniform block spread, returning `dL/dZ_e` at mask scale.
    pub fn backprop_print(&self, upstream: &CornerGrads, corners: &CornerSet) -> RasterField {
        let sigmoid_back = |u: &RasterField, z: &RasterField| -> RasterField {
            u.zip_map(z, |uv, zv| uv * self.ol.theta_p * zv * (1.0 - zv))
        };
        let mut d_aerial = sigmoid_back(&upstream.inner, &corners.inner);
        d_aerial.add_assign(&sigmoid_back(&upstream.nominal, &corners.nominal));
        d_aerial.add_assign(&sigmoid_back(&upstream.outer, &corners.outer));
        reduce_4x_adjoint(&self.conv.convolve(&d_aerial))
    }
}
