//! Exact forward model: per-shot energy deposition as products of erf
//! windows, superposition over the shot set, and the differentiable resist
//! response.
//!
//! This path evaluates every shot at every pixel with no spatial
//! truncation — it is the accuracy oracle for the FFT-accelerated model,
//! so correctness wins over speed.

use rayon::prelude::*;

use crate::erf::erf_window;
use crate::field::RasterField;
use crate::model::{EblParams, Shot, ShotSet};

/// The four 1-D axis profiles of one shot, sampled at pixel centers:
/// forward- and backscatter windows along x and y. Each value is in
/// [0, 1]; the energy field is their weighted outer product.
#[derive(Debug, Clone)]
pub struct ShotProfiles {
    pub fx_f: Vec<f64>,
    pub fy_f: Vec<f64>,
    pub fx_b: Vec<f64>,
    pub fy_b: Vec<f64>,
}

/// Samples the four erf-window profiles of `shot` on an `m`-pixel axis.
///
/// `fx_b[i] = erf_window(i + 0.5, shot.x, shot.w, sigma_b)`, and likewise
/// for the forward sigma and the y axis.
pub fn shot_profiles(shot: &Shot, ebl: &EblParams, m: usize) -> ShotProfiles {
    let axis = |left: f64, extent: f64, sigma: f64| -> Vec<f64> {
        (0..m)
            .map(|i| erf_window(i as f64 + 0.5, left, extent, sigma))
            .collect()
    };
    ShotProfiles {
        fx_f: axis(shot.x, shot.w, ebl.sigma_f),
        fy_f: axis(shot.y, shot.h, ebl.sigma_f),
        fx_b: axis(shot.x, shot.w, ebl.sigma_b),
        fy_b: axis(shot.y, shot.h, ebl.sigma_b),
    }
}

/// Energy deposited by a single shot on an `m` x `m` grid:
/// `d*q*(w_f*Fx_f*Fy_f + w_b*Fx_b*Fy_b)` per pixel.
pub fn shot_energy(shot: &Shot, ebl: &EblParams, m: usize) -> RasterField {
    total_energy(&ShotSet::new(vec![*shot], m), ebl)
}

/// Pixel-wise sum of every shot's energy field.
///
/// Rows are computed in parallel; within a row, shots accumulate in index
/// order, so the result is bit-identical across runs and thread counts.
pub fn total_energy(shots: &ShotSet, ebl: &EblParams) -> RasterField {
    let m = shots.grid_size;
    let profiles: Vec<ShotProfiles> = shots
        .shots
        .par_iter()
        .map(|s| shot_profiles(s, ebl, m))
        .collect();
    let coeffs: Vec<(f64, f64)> = shots
        .iter()
        .map(|s| {
            let w = s.weight();
            (w * ebl.w_forward(), w * ebl.w_backward())
        })
        .collect();

    let mut field = RasterField::zeros(m, m);
    field
        .as_mut_slice()
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(j, row)| {
            for (p, &(cf, cb)) in profiles.iter().zip(&coeffs) {
                let af = cf * p.fy_f[j];
                let ab = cb * p.fy_b[j];
                for (v, (fx_f, fx_b)) in row.iter_mut().zip(p.fx_f.iter().zip(&p.fx_b)) {
                    *v += af * fx_f + ab * fx_b;
                }
            }
        });
    field
}

/// Numerically stable logistic function `1 / (1 + exp(-t))`.
pub(crate) fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + f64::exp(-t))
    } else {
        let e = f64::exp(t);
        e / (1.0 + e)
    }
}

/// Resist response `Z_e = logistic(theta_z * (E - e_th))`, pixel-wise.
///
/// Values lie in (0, 1) and increase monotonically with energy; the
/// derivative `theta_z * Z_e * (1 - Z_e)` is what the backward pass uses.
pub fn resist_develop(energy: &RasterField, ebl: &EblParams) -> RasterField {
    energy.map(|e| logistic(ebl.theta_z * (e - ebl.e_th)))
}
