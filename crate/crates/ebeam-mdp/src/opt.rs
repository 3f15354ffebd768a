//! Projected-gradient optimization of shot parameters: the shot-level
//! loop that fits a shot set to a mask target, and its wafer-level
//! extension that descends through the optical projection stage.
//!
//! Each epoch projects the continuous parameters onto the feasible
//! integer/binary set, evaluates the forward model and losses on the
//! projected shots, pulls the loss gradient back to the shot parameters,
//! and takes a plain gradient step. The best projected set by total loss
//! is snapshotted and returned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{resist_develop, total_energy};
use crate::fast::FastModel;
use crate::field::RasterField;
use crate::grad::{
    adjoint_accumulate, adjoint_accumulate_fast, backprop_resist, ste_project, ShotGrad,
};
use crate::loss::{
    compose, dose_loss, l2_loss, overlap_loss, pvb_loss, sparsity_loss, CornerGrads, LossReport,
};
use crate::model::{EblParams, LossWeights, OlParams, Shot, ShotBounds, ShotSet};
use crate::optical::{cdr_retarget, reduce_4x, CornerSet, OpticalModel};

/// Which optimization problem a run solves: shot-level mask fitting or
/// wafer-level fitting through the optical stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptMode {
    Mdp,
    Ilt,
}

/// Which shot set the gradient step starts from: the projected set
/// (re-anchoring the parameters on the feasible grid each epoch) or the
/// raw continuous set (classic straight-through accumulation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateFrom {
    Projected,
    Raw,
}

/// Forward-model selection: the FFT-accelerated path, or the exact
/// superposition as a cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForwardModel {
    Fast,
    Exact,
}

/// Knobs of the optimization loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptConfig {
    pub epochs: usize,
    pub lr: f64,
    pub mode: OptMode,
    pub weights: LossWeights,
    pub update_from: UpdateFrom,
    pub seed: u64,
    pub forward: ForwardModel,
    /// Edge blur of the fast model's dose map, in pixels.
    pub sigma_prime: f64,
    /// Low-pass retargeting radius for the wafer-level descent target;
    /// 0 disables retargeting.
    pub sigma_cdr: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            epochs: 200,
            // Tuned on the committed toy patterns: large enough to make
            // visible progress in 200 epochs, small enough that a single
            // step cannot deactivate a shot (which the saturated resist
            // would make irreversible).
            lr: 0.002,
            mode: OptMode::Mdp,
            weights: LossWeights::default(),
            update_from: UpdateFrom::Projected,
            seed: 0,
            forward: ForwardModel::Fast,
            sigma_prime: 0.5,
            sigma_cdr: 0.0,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::invalid("lr must be finite and positive"));
        }
        if !(self.sigma_prime > 0.0) {
            return Err(Error::invalid("sigma_prime must be positive"));
        }
        if !(self.sigma_cdr >= 0.0) {
            return Err(Error::invalid("sigma_cdr must be nonnegative"));
        }
        self.weights.validate()
    }
}

/// Learning rate at a given 1-based epoch: the configured rate before
/// epoch `floor(epochs / 2)`, half of it at and after. A 1-epoch budget
/// never reaches the halving point.
pub fn lr_schedule(epoch: usize, cfg: &OptConfig) -> f64 {
    let half = cfg.epochs / 2;
    if half >= 1 && epoch >= half {
        cfg.lr * 0.5
    } else {
        cfg.lr
    }
}

/// One epoch's loss report and the learning rate it was computed under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub report: LossReport,
    pub lr: f64,
}

/// Full optimization history plus the best snapshot.
#[derive(Debug, Clone)]
pub struct OptTrace {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch of the first strictly-lowest total loss.
    pub best_epoch: usize,
    pub best_loss: f64,
    pub best_shots: ShotSet,
}

/// The shared epoch loop: project, evaluate, snapshot, step.
fn descend(
    init: &ShotSet,
    bounds: &ShotBounds,
    cfg: &OptConfig,
    mut eval: impl FnMut(&ShotSet) -> Result<(LossReport, Vec<ShotGrad>)>,
) -> Result<(ShotSet, OptTrace)> {
    cfg.validate()?;
    bounds.validate()?;
    if init.is_empty() {
        return Err(Error::invalid("initial shot set is empty"));
    }
    let m = init.grid_size;

    let mut current = init.clone();
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, ShotSet)> = None;

    for epoch in 1..=cfg.epochs {
        let lr = lr_schedule(epoch, cfg);
        let projected = ste_project(&current, bounds, m);
        let (report, grads) = eval(&projected)?;
        if let Some(component) = report.first_non_finite() {
            return Err(Error::NonFiniteLoss { epoch, component });
        }
        if best.as_ref().is_none_or(|(_, loss, _)| report.total < *loss) {
            best = Some((epoch, report.total, projected.clone()));
        }
        records.push(EpochRecord { report, lr });

        let base = match cfg.update_from {
            UpdateFrom::Projected => &projected,
            UpdateFrom::Raw => &current,
        };
        let stepped: Vec<Shot> = base
            .iter()
            .zip(&grads)
            .map(|(s, g)| Shot {
                x: s.x - lr * g.d_x,
                y: s.y - lr * g.d_y,
                w: s.w - lr * g.d_w,
                h: s.h - lr * g.d_h,
                dose: s.dose - lr * g.d_d,
                q: s.q - lr * g.d_q,
            })
            .collect();
        current = ShotSet::new(stepped, m);
    }

    let (best_epoch, best_loss, best_shots) = best.expect("at least one epoch ran");
    Ok((
        best_shots.clone(),
        OptTrace {
            epochs: records,
            best_epoch,
            best_loss,
            best_shots,
        },
    ))
}

/// Exposure forward/backward pair, on either the fast or the exact path.
struct ExposureEngine<'a> {
    ebl: &'a EblParams,
    fast: Option<FastModel>,
}

impl<'a> ExposureEngine<'a> {
    fn new(grid: usize, ebl: &'a EblParams, cfg: &OptConfig) -> ExposureEngine<'a> {
        let fast = match cfg.forward {
            ForwardModel::Fast => Some(FastModel::new(grid, ebl, cfg.sigma_prime)),
            ForwardModel::Exact => None,
        };
        ExposureEngine { ebl, fast }
    }

    fn energy(&self, shots: &ShotSet) -> RasterField {
        match &self.fast {
            Some(model) => model.energy(shots),
            None => total_energy(shots, self.ebl),
        }
    }

    fn accumulate(&self, upstream: &RasterField, shots: &ShotSet) -> Vec<ShotGrad> {
        match &self.fast {
            Some(model) => adjoint_accumulate_fast(upstream, shots, model),
            None => adjoint_accumulate(upstream, shots, self.ebl),
        }
    }
}

/// Folds the weighted shot-local loss gradients into the exposure-path
/// gradients.
fn add_shot_losses(
    mut grads: Vec<ShotGrad>,
    weights: &LossWeights,
    sparsity: &[ShotGrad],
    dose: &[ShotGrad],
    overlap: &[ShotGrad],
) -> Vec<ShotGrad> {
    for (k, g) in grads.iter_mut().enumerate() {
        g.add_scaled(&sparsity[k], weights.gamma);
        g.add_scaled(&dose[k], weights.delta);
        g.add_scaled(&overlap[k], weights.epsilon);
    }
    grads
}

/// Shot-level optimization: fits the simulated mask pattern to a binary
/// target under the composite objective, running exactly `cfg.epochs`
/// epochs of project / simulate / descend. Returns the best projected
/// shot set and the full trace.
pub fn mdp_optimize(
    init: &ShotSet,
    target: &RasterField,
    ebl: &EblParams,
    bounds: &ShotBounds,
    cfg: &OptConfig,
) -> Result<(ShotSet, OptTrace)> {
    ebl.validate()?;
    let m = init.grid_size;
    if target.width() != m || target.height() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("{m}x{m}"),
            actual: format!("{}x{}", target.width(), target.height()),
            context: "mask target vs shot grid",
        });
    }
    let engine = ExposureEngine::new(m, ebl, cfg);
    let weights = cfg.weights;

    descend(init, bounds, cfg, |shots| {
        let energy = engine.energy(shots);
        let z_e = resist_develop(&energy, ebl);
        let (l2, mut d_z) = l2_loss(&z_e, target)?;
        let (sparsity, s_g) = sparsity_loss(shots);
        let (dose, d_g) = dose_loss(shots);
        let (overlap, o_g) = overlap_loss(shots);
        let report = compose(&weights, l2, sparsity, dose, overlap, None);

        d_z.scale(weights.alpha);
        let d_e = backprop_resist(&d_z, &z_e, ebl);
        let grads = add_shot_losses(engine.accumulate(&d_e, shots), &weights, &s_g, &d_g, &o_g);
        Ok((report, grads))
    })
}

/// Forward intermediates of the wafer-level pipeline for one shot set.
pub struct IltStages {
    /// Deposited energy on the mask grid.
    pub energy: RasterField,
    /// Developed mask pattern on the mask grid.
    pub z_e: RasterField,
    /// Mask pattern reduced to wafer scale.
    pub reduced: RasterField,
    /// Wafer prints at the three dose corners.
    pub corners: CornerSet,
}

struct IltPipeline<'a> {
    engine: ExposureEngine<'a>,
    optical: OpticalModel,
    ebl: &'a EblParams,
}

impl<'a> IltPipeline<'a> {
    fn forward(&self, shots: &ShotSet) -> Result<IltStages> {
        let energy = self.engine.energy(shots);
        let z_e = resist_develop(&energy, self.ebl);
        let reduced = reduce_4x(&z_e)?;
        let corners = self.optical.print(&reduced);
        Ok(IltStages {
            energy,
            z_e,
            reduced,
            corners,
        })
    }
}

/// Runs the full wafer-level forward pipeline (exposure, resist, 4x
/// reduction, corner prints) on one shot set, using the same model
/// construction as [`ilt_optimize`].
pub fn ilt_forward(
    shots: &ShotSet,
    ebl: &EblParams,
    ol: &OlParams,
    cfg: &OptConfig,
) -> Result<IltStages> {
    ebl.validate()?;
    ol.validate()?;
    let m = shots.grid_size;
    if !m.is_multiple_of(4) {
        return Err(Error::invalid(format!(
            "mask grid {m} is not 4x a wafer grid"
        )));
    }
    let pipeline = IltPipeline {
        engine: ExposureEngine::new(m, ebl, cfg),
        optical: OpticalModel::new(m / 4, ol),
        ebl,
    };
    pipeline.forward(shots)
}

/// Wafer-level optimization: like [`mdp_optimize`], but the forward pass
/// continues through 4x reduction and the corner print model, the
/// objective adds the process-variation band, and the fidelity gradient
/// descends toward the retargeted wafer pattern while the reported
/// fidelity is always measured against the original target.
pub fn ilt_optimize(
    init: &ShotSet,
    wafer_target: &RasterField,
    ebl: &EblParams,
    ol: &OlParams,
    bounds: &ShotBounds,
    cfg: &OptConfig,
) -> Result<(ShotSet, OptTrace)> {
    ebl.validate()?;
    ol.validate()?;
    let m = init.grid_size;
    if wafer_target.width() * 4 != m || wafer_target.height() * 4 != m {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", m / 4, m / 4),
            actual: format!("{}x{}", wafer_target.width(), wafer_target.height()),
            context: "wafer target vs quarter of the mask grid",
        });
    }
    let wafer = m / 4;
    let pipeline = IltPipeline {
        engine: ExposureEngine::new(m, ebl, cfg),
        optical: OpticalModel::new(wafer, ol),
        ebl,
    };
    let descent_target = cdr_retarget(wafer_target, cfg.sigma_cdr);
    let weights = cfg.weights;

    descend(init, bounds, cfg, |shots| {
        let stages = pipeline.forward(shots)?;

        // Descent fidelity drives the gradient; reported fidelity is
        // always against the original layout.
        let (_, mut d_nominal) = l2_loss(&stages.corners.nominal, &descent_target)?;
        let (l2_reported, _) = l2_loss(&stages.corners.nominal, wafer_target)?;
        let (band, mut band_grads) =
            pvb_loss(&stages.corners.inner, &stages.corners.nominal, &stages.corners.outer)?;
        let (sparsity, s_g) = sparsity_loss(shots);
        let (dose, d_g) = dose_loss(shots);
        let (overlap, o_g) = overlap_loss(shots);
        let report = compose(&weights, l2_reported, sparsity, dose, overlap, Some(band));

        d_nominal.scale(weights.alpha);
        band_grads.inner.scale(weights.beta);
        band_grads.outer.scale(weights.beta);
        let upstream = CornerGrads {
            inner: band_grads.inner,
            nominal: d_nominal,
            outer: band_grads.outer,
        };
        let d_z_mask = pipeline.optical.backprop_print(&upstream, &stages.corners);
        let d_e = backprop_resist(&d_z_mask, &stages.z_e, ebl);
        let grads =
            add_shot_losses(pipeline.engine.accumulate(&d_e, shots), &weights, &s_g, &d_g, &o_g);
        Ok((report, grads))
    })
}
