//! Analytic gradients of deposited energy with respect to shot parameters,
//! the adjoint contraction that turns pixel-space loss gradients into
//! shot-space gradients, and the straight-through-estimator projection.
//!
//! Every shot's energy is a weighted outer product of 1-D erf windows, so
//! its parameter derivatives are outer products of windows and edge
//! Gaussians. The adjoint therefore reduces to 1-D contractions of the
//! upstream field against axis profiles: O(M^2) per shot instead of six
//! dense M^2 fields.

use rayon::prelude::*;

use crate::erf::{gaussian, gaussian_diff};
use crate::exact::shot_profiles;
use crate::fast::{axis_segment, FastModel};
use crate::field::RasterField;
use crate::model::{EblParams, Shot, ShotBounds, ShotSet};

/// Gradient of a scalar loss with respect to one shot's six parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShotGrad {
    pub d_x: f64,
    pub d_y: f64,
    pub d_w: f64,
    pub d_h: f64,
    pub d_d: f64,
    pub d_q: f64,
}

impl ShotGrad {
    pub fn zero() -> ShotGrad {
        ShotGrad::default()
    }

    /// `self += scale * other`, the accumulation step for weighted losses.
    pub fn add_scaled(&mut self, other: &ShotGrad, scale: f64) {
        self.d_x += scale * other.d_x;
        self.d_y += scale * other.d_y;
        self.d_w += scale * other.d_w;
        self.d_h += scale * other.d_h;
        self.d_d += scale * other.d_d;
        self.d_q += scale * other.d_q;
    }

    pub fn is_finite(&self) -> bool {
        self.d_x.is_finite()
            && self.d_y.is_finite()
            && self.d_w.is_finite()
            && self.d_h.is_finite()
            && self.d_d.is_finite()
            && self.d_q.is_finite()
    }
}

/// Dense per-pixel derivatives of one shot's energy field with respect to
/// each of its six parameters.
pub struct EnergyGradFields {
    pub d_x: RasterField,
    pub d_y: RasterField,
    pub d_w: RasterField,
    pub d_h: RasterField,
    pub d_d: RasterField,
    pub d_q: RasterField,
}

/// Evaluates all six derivative fields of a single shot on an `m` x `m`
/// grid. Used by tests and diagnostics; the optimizer goes through
/// `adjoint_accumulate`, which never materializes these.
pub fn energy_grad_fields(shot: &Shot, ebl: &EblParams, m: usize) -> EnergyGradFields {
    let p = shot_profiles(shot, ebl, m);
    let (sf, sb) = (ebl.sigma_f, ebl.sigma_b);
    let axis_dg = |left: f64, extent: f64, sigma: f64| -> Vec<f64> {
        (0..m)
            .map(|i| gaussian_diff(i as f64 + 0.5, left, extent, sigma))
            .collect()
    };
    let axis_edge = |edge: f64, sigma: f64| -> Vec<f64> {
        (0..m).map(|i| gaussian(i as f64 + 0.5, edge, sigma)).collect()
    };
    // Left/right edge kernel pairs per axis and scatter component.
    let dgx_f = axis_dg(shot.x, shot.w, sf);
    let dgx_b = axis_dg(shot.x, shot.w, sb);
    let dgy_f = axis_dg(shot.y, shot.h, sf);
    let dgy_b = axis_dg(shot.y, shot.h, sb);
    let gxw_f = axis_edge(shot.x + shot.w, sf);
    let gxw_b = axis_edge(shot.x + shot.w, sb);
    let gyh_f = axis_edge(shot.y + shot.h, sf);
    let gyh_b = axis_edge(shot.y + shot.h, sb);

    let (wf, wb) = (ebl.w_forward(), ebl.w_backward());
    let dq = shot.dose * shot.q;
    let fill = |x_f: &[f64], y_f: &[f64], x_b: &[f64], y_b: &[f64], scale: f64| -> RasterField {
        let mut field = RasterField::zeros(m, m);
        field
            .as_mut_slice()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(j, row)| {
                let (cf, cb) = (scale * wf * y_f[j], scale * wb * y_b[j]);
                for (i, v) in row.iter_mut().enumerate() {
                    *v = cf * x_f[i] + cb * x_b[i];
                }
            });
        field
    };

    EnergyGradFields {
        d_x: fill(&dgx_f, &p.fy_f, &dgx_b, &p.fy_b, dq),
        d_y: fill(&p.fx_f, &dgy_f, &p.fx_b, &dgy_b, dq),
        d_w: fill(&gxw_f, &p.fy_f, &gxw_b, &p.fy_b, dq),
        d_h: fill(&p.fx_f, &gyh_f, &p.fx_b, &gyh_b, dq),
        d_d: fill(&p.fx_f, &p.fy_f, &p.fx_b, &p.fy_b, shot.q),
        d_q: fill(&p.fx_f, &p.fy_f, &p.fx_b, &p.fy_b, shot.dose),
    }
}

/// 1-D contractions of the upstream field against one shot's axis
/// profiles, per scatter component: t(i) = sum_j U(i,j) Fy(j) and
/// u(j) = sum_i U(i,j) Fx(i).
struct Contractions {
    t_f: Vec<f64>,
    t_b: Vec<f64>,
    u_f: Vec<f64>,
    u_b: Vec<f64>,
}

fn contract(upstream: &RasterField, p: &crate::exact::ShotProfiles, m: usize) -> Contractions {
    let mut c = Contractions {
        t_f: vec![0.0; m],
        t_b: vec![0.0; m],
        u_f: vec![0.0; m],
        u_b: vec![0.0; m],
    };
    for j in 0..m {
        let row = upstream.row(j);
        let (fy_f, fy_b) = (p.fy_f[j], p.fy_b[j]);
        let (mut sf, mut sb) = (0.0, 0.0);
        for (i, &u) in row.iter().enumerate() {
            c.t_f[i] += u * fy_f;
            c.t_b[i] += u * fy_b;
            sf += u * p.fx_f[i];
            sb += u * p.fx_b[i];
        }
        c.u_f[j] = sf;
        c.u_b[j] = sb;
    }
    c
}

fn shot_adjoint(upstream: &RasterField, shot: &Shot, ebl: &EblParams, m: usize) -> ShotGrad {
    let p = shot_profiles(shot, ebl, m);
    let c = contract(upstream, &p, m);
    let (sf, sb) = (ebl.sigma_f, ebl.sigma_b);

    // x-axis dots: position (edge-pair difference), width (right edge),
    // and the plain window for the dose/activation gradients.
    let (mut x_f, mut x_b, mut w_f_dot, mut w_b_dot, mut e_f, mut e_b) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..m {
        let px = i as f64 + 0.5;
        x_f += gaussian_diff(px, shot.x, shot.w, sf) * c.t_f[i];
        x_b += gaussian_diff(px, shot.x, shot.w, sb) * c.t_b[i];
        w_f_dot += gaussian(px, shot.x + shot.w, sf) * c.t_f[i];
        w_b_dot += gaussian(px, shot.x + shot.w, sb) * c.t_b[i];
        e_f += p.fx_f[i] * c.t_f[i];
        e_b += p.fx_b[i] * c.t_b[i];
    }
    // y-axis dots against the column contractions.
    let (mut y_f, mut y_b, mut h_f_dot, mut h_b_dot) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..m {
        let py = j as f64 + 0.5;
        y_f += gaussian_diff(py, shot.y, shot.h, sf) * c.u_f[j];
        y_b += gaussian_diff(py, shot.y, shot.h, sb) * c.u_b[j];
        h_f_dot += gaussian(py, shot.y + shot.h, sf) * c.u_f[j];
        h_b_dot += gaussian(py, shot.y + shot.h, sb) * c.u_b[j];
    }

    let (wf, wb) = (ebl.w_forward(), ebl.w_backward());
    let dq = shot.dose * shot.q;
    let window_mass = wf * e_f + wb * e_b;
    ShotGrad {
        d_x: dq * (wf * x_f + wb * x_b),
        d_y: dq * (wf * y_f + wb * y_b),
        d_w: dq * (wf * w_f_dot + wb * w_b_dot),
        d_h: dq * (wf * h_f_dot + wb * h_b_dot),
        d_d: shot.q * window_mass,
        d_q: shot.dose * window_mass,
    }
}

/// Contracts an upstream `dL/dE` field against every shot's analytic
/// energy derivatives: returns `sum_{x,y} upstream * dE/dtheta_k` for each
/// shot `k` and parameter `theta`. Shots are processed independently, so
/// the result is deterministic under any parallel schedule.
pub fn adjoint_accumulate(
    upstream: &RasterField,
    shots: &ShotSet,
    ebl: &EblParams,
) -> Vec<ShotGrad> {
    let m = shots.grid_size;
    assert_eq!(upstream.width(), m);
    assert_eq!(upstream.height(), m);
    shots
        .shots
        .par_iter()
        .map(|s| shot_adjoint(upstream, s, ebl, m))
        .collect()
}

fn shot_dose_adjoint(
    upstream: &RasterField,
    shot: &Shot,
    sigma_prime: f64,
    m: usize,
) -> ShotGrad {
    let (i0, wx) = axis_segment(shot.x, shot.w, sigma_prime, m);
    let (j0, wy) = axis_segment(shot.y, shot.h, sigma_prime, m);
    if wx.is_empty() || wy.is_empty() {
        return ShotGrad::zero();
    }

    let mut t = vec![0.0; wx.len()];
    let mut u = vec![0.0; wy.len()];
    for (jj, &wyv) in wy.iter().enumerate() {
        let row = upstream.row(j0 + jj);
        let mut s = 0.0;
        for (ii, &wxv) in wx.iter().enumerate() {
            let uval = row[i0 + ii];
            t[ii] += uval * wyv;
            s += uval * wxv;
        }
        u[jj] = s;
    }

    let (mut s_x, mut s_w, mut s_e) = (0.0, 0.0, 0.0);
    for (ii, tv) in t.iter().enumerate() {
        let px = (i0 + ii) as f64 + 0.5;
        s_x += gaussian_diff(px, shot.x, shot.w, sigma_prime) * tv;
        s_w += gaussian(px, shot.x + shot.w, sigma_prime) * tv;
        s_e += wx[ii] * tv;
    }
    let (mut s_y, mut s_h) = (0.0, 0.0);
    for (jj, uv) in u.iter().enumerate() {
        let py = (j0 + jj) as f64 + 0.5;
        s_y += gaussian_diff(py, shot.y, shot.h, sigma_prime) * uv;
        s_h += gaussian(py, shot.y + shot.h, sigma_prime) * uv;
    }

    let dq = shot.dose * shot.q;
    ShotGrad {
        d_x: dq * s_x,
        d_y: dq * s_y,
        d_w: dq * s_w,
        d_h: dq * s_h,
        d_d: shot.q * s_e,
        d_q: shot.dose * s_e,
    }
}

/// Adjoint of `build_dose_map`: contracts an upstream `dL/dM_d` field
/// against each shot's single-sigma window derivatives, over the same
/// truncated support the dose map itself uses.
pub fn adjoint_accumulate_dose(
    upstream: &RasterField,
    shots: &ShotSet,
    sigma_prime: f64,
) -> Vec<ShotGrad> {
    let m = shots.grid_size;
    assert_eq!(upstream.width(), m);
    assert_eq!(upstream.height(), m);
    shots
        .shots
        .par_iter()
        .map(|s| shot_dose_adjoint(upstream, s, sigma_prime, m))
        .collect()
}

/// Backward pass of the fast forward model: smears the upstream `dL/dE`
/// field with the (even, hence self-adjoint) PSF, then contracts against
/// the dose-map windows.
pub fn adjoint_accumulate_fast(
    upstream: &RasterField,
    shots: &ShotSet,
    model: &FastModel,
) -> Vec<ShotGrad> {
    let smeared = model.convolve_psf(upstream);
    adjoint_accumulate_dose(&smeared, shots, model.sigma_prime())
}

/// Backward pass of the resist stage: `dL/dE = upstream * theta_z *
/// Z_e * (1 - Z_e)` pixel-wise.
pub fn backprop_resist(
    upstream: &RasterField,
    z_e: &RasterField,
    ebl: &EblParams,
) -> RasterField {
    upstream.zip_map(z_e, |u, z| u * ebl.theta_z * z * (1.0 - z))
}

/// Binarized activation flag: clamp to [0, 1], then 1 for values at or
/// above 0.5 and 0 otherwise (non-finite inputs fall to 0). The STE
/// backward contract treats this as the identity.
pub(crate) fn binarize_activation(q: f64) -> f64 {
    if q.clamp(0.0, 1.0) >= 0.5 {
        1.0
    } else {
        0.0
    }
}

/// Forward half of the straight-through estimator: positions and sizes
/// round half-up and clamp to their bounds, dose clamps without rounding,
/// and the activation flag clamps to [0, 1] then binarizes at 0.5 (ties
/// go to 1). Idempotent.
///
/// Backward contract: gradients pass through rounding, clamping, and
/// binarization unchanged — callers apply shot gradients computed at the
/// projected values directly to the unprojected parameters.
pub fn ste_project(shots: &ShotSet, bounds: &ShotBounds, m: usize) -> ShotSet {
    let round_half_up = |v: f64| (v + 0.5).floor();
    let top = (m - 1) as f64;
    let projected = shots
        .iter()
        .map(|s| Shot {
            x: round_half_up(s.x).clamp(0.0, top),
            y: round_half_up(s.y).clamp(0.0, top),
            w: round_half_up(s.w).clamp(bounds.w_min as f64, bounds.w_max as f64),
            h: round_half_up(s.h).clamp(bounds.h_min as f64, bounds.h_max as f64),
            dose: s.dose.clamp(bounds.d_min, bounds.d_max),
            q: binarize_activation(s.q),
        })
        .collect();
    ShotSet::new(projected, m)
}
