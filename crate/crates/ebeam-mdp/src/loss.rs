//! Components of the composite objective — pattern fidelity, shot
//! sparsity, cumulative dose, pairwise shot overlap, and the
//! process-variation band — each returning its value together with the
//! gradient contribution it sends backward.

use rayon::prelude::*;

use crate::error::Result;
use crate::field::RasterField;
use crate::grad::{binarize_activation, ShotGrad};
use crate::model::{LossWeights, ShotSet};

/// Weighted total and raw component values of one objective evaluation.
///
/// The components are stored unweighted; `total` applies the active
/// weights. `pvb` is `None` in shot-level (mask-only) optimization, where
/// no process corners exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub l2: f64,
    pub sparsity: f64,
    pub dose: f64,
    pub overlap: f64,
    pub pvb: Option<f64>,
}

impl LossReport {
    pub const CSV_HEADER: &'static str = "epoch,total,l2,pvb,sparsity,dose,overlap,lr";

    /// One trace row matching [`LossReport::CSV_HEADER`]. The pvb column
    /// reads 0 when the component is absent.
    pub fn csv_row(&self, epoch: usize, lr: f64) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            epoch,
            self.total,
            self.l2,
            self.pvb.unwrap_or(0.0),
            self.sparsity,
            self.dose,
            self.overlap,
            lr
        )
    }

    /// Name of the first non-finite component, if any — the payload for
    /// divergence errors.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        if !self.l2.is_finite() {
            return Some("l2");
        }
        if !self.pvb.unwrap_or(0.0).is_finite() {
            return Some("pvb");
        }
        if !self.sparsity.is_finite() {
            return Some("sparsity");
        }
        if !self.dose.is_finite() {
            return Some("dose");
        }
        if !self.overlap.is_finite() {
            return Some("overlap");
        }
        if !self.total.is_finite() {
            return Some("total");
        }
        None
    }
}

/// Squared-distance fidelity term: value `sum (p - t)^2`, gradient field
/// `2 (p - t)` toward the prediction.
pub fn l2_loss(predicted: &RasterField, target: &RasterField) -> Result<(f64, RasterField)> {
    predicted.require_same_size(target, "fidelity loss operands")?;
    let value = predicted
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    let gradient = predicted.zip_map(target, |p, t| 2.0 * (p - t));
    Ok((value, gradient))
}

/// Shot-count term: the number of active shots after binarization.
///
/// The binarization blocks true gradients, so the straight-through
/// convention applies: every shot receives `d_q = 1`, pushing activations
/// downward uniformly.
pub fn sparsity_loss(shots: &ShotSet) -> (f64, Vec<ShotGrad>) {
    let value = shots.iter().map(|s| binarize_activation(s.q)).sum();
    let grads = shots
        .iter()
        .map(|_| ShotGrad {
            d_q: 1.0,
            ..ShotGrad::zero()
        })
        .collect();
    (value, grads)
}

/// Cumulative-dose term: value `sum w h d q` over shots, gradients by the
/// product rule.
pub fn dose_loss(shots: &ShotSet) -> (f64, Vec<ShotGrad>) {
    let value = shots.iter().map(|s| s.w * s.h * s.dose * s.q).sum();
    let grads = shots
        .iter()
        .map(|s| ShotGrad {
            d_x: 0.0,
            d_y: 0.0,
            d_w: s.h * s.dose * s.q,
            d_h: s.w * s.dose * s.q,
            d_d: s.w * s.h * s.q,
            d_q: s.w * s.h * s.dose,
        })
        .collect();
    (value, grads)
}

/// Overlap length of intervals `[a_left, a_left + a_extent]` and
/// `[b_left, b_left + b_extent]`, plus its derivatives with respect to
/// `a_left` and `a_extent`. Uses subgradient 0 once the clamp at zero is
/// active.
fn interval_overlap(a_left: f64, a_extent: f64, b_left: f64, b_extent: f64) -> (f64, f64, f64) {
    let right = (a_left + a_extent).min(b_left + b_extent);
    let left = a_left.max(b_left);
    let len = right - left;
    if len <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let d_right = if a_left + a_extent <= b_left + b_extent {
        1.0
    } else {
        0.0
    };
    let d_left = if a_left >= b_left { 1.0 } else { 0.0 };
    (len, d_right - d_left, d_right)
}

/// Pairwise-overlap term: `sum over pairs k < p` of the axis-aligned
/// intersection area times both binarized activations.
///
/// Each shot's gradient gathers every pair it participates in, visiting
/// partners in index order; the pair values are reduced in shot order, so
/// the result is deterministic under any parallel schedule. Activation
/// gradients pass straight through the binarization.
pub fn overlap_loss(shots: &ShotSet) -> (f64, Vec<ShotGrad>) {
    let n = shots.len();
    let per_shot: Vec<(f64, ShotGrad)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = &shots.shots[k];
            let qa = binarize_activation(a.q);
            let mut value = 0.0;
            let mut grad = ShotGrad::zero();
            for (p, b) in shots.iter().enumerate() {
                if p == k {
                    continue;
                }
                let qb = binarize_activation(b.q);
                let (ox, dox_dx, dox_dw) = interval_overlap(a.x, a.w, b.x, b.w);
                let (oy, doy_dy, doy_dh) = interval_overlap(a.y, a.h, b.y, b.h);
                let area = ox * oy;
                if p > k {
                    value += area * qa * qb;
                }
                let c = qa * qb;
                grad.d_x += c * dox_dx * oy;
                grad.d_w += c * dox_dw * oy;
                grad.d_y += c * doy_dy * ox;
                grad.d_h += c * doy_dh * ox;
                grad.d_q += area * qb;
            }
            (value, grad)
        })
        .collect();
    let value = per_shot.iter().map(|(v, _)| v).sum();
    let grads = per_shot.into_iter().map(|(_, g)| g).collect();
    (value, grads)
}

/// Per-corner gradient fields of the process-variation term. The nominal
/// corner receives nothing from this term (its gradient flows only through
/// the fidelity loss), but is carried for uniform composition.
pub struct CornerGrads {
    pub inner: RasterField,
    pub nominal: RasterField,
    pub outer: RasterField,
}

/// Process-variation band term: squared difference between the outer and
/// inner corner prints, `sum (Z_outer - Z_inner)^2`.
pub fn pvb_loss(
    inner: &RasterField,
    nominal: &RasterField,
    outer: &RasterField,
) -> Result<(f64, CornerGrads)> {
    inner.require_same_size(outer, "process corner prints")?;
    inner.require_same_size(nominal, "process corner prints")?;
    let value = outer
        .as_slice()
        .iter()
        .zip(inner.as_slice())
        .map(|(o, i)| (o - i) * (o - i))
        .sum();
    let d_outer = outer.zip_map(inner, |o, i| 2.0 * (o - i));
    let d_inner = d_outer.map(|v| -v);
    Ok((
        value,
        CornerGrads {
            inner: d_inner,
            nominal: RasterField::zeros(nominal.width(), nominal.height()),
            outer: d_outer,
        },
    ))
}

/// Combines raw component values into a [`LossReport`] under the given
/// weights. The band weight is ignored when no band value is supplied.
pub fn compose(
    weights: &LossWeights,
    l2: f64,
    sparsity: f64,
    dose: f64,
    overlap: f64,
    pvb: Option<f64>,
) -> LossReport {
    let mut total = weights.alpha * l2
        + weights.gamma * sparsity
        + weights.delta * dose
        + weights.epsilon * overlap;
    if let Some(band) = pvb {
        total += weights.beta * band;
    }
    LossReport {
        total,
        l2,
        sparsity,
        dose,
        overlap,
        pvb,
    }
}
