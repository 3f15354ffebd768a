//! Domain types: shots, shot sets, physical parameters, and their validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One rectangular variable-shaped-beam exposure.
///
/// `(x, y)` is the lower-left corner in pixels, `(w, h)` the width and
/// height, `dose` the dimensionless dose factor, and `q` the activation
/// flag. All six fields are free reals while the optimizer runs; after
/// projection (`ste_project`) the geometry is integral and `q` is 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub dose: f64,
    /// Activation flag, continuously relaxed; binarized at 0.5 by projection.
    pub q: f64,
}

impl Shot {
    pub fn new(x: f64, y: f64, w: f64, h: f64, dose: f64, q: f64) -> Self {
        Shot { x, y, w, h, dose, q }
    }

    /// Effective exposure weight `dose * q`.
    pub fn weight(&self) -> f64 {
        self.dose * self.q
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.dose.is_finite()
            && self.q.is_finite()
    }
}

/// An ordered set of shots on a square M x M pixel grid.
///
/// Iteration order is stable; the index of a shot is its identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSet {
    pub shots: Vec<Shot>,
    pub grid_size: usize,
}

impl ShotSet {
    pub fn new(shots: Vec<Shot>, grid_size: usize) -> Self {
        ShotSet { shots, grid_size }
    }

    pub fn empty(grid_size: usize) -> Self {
        ShotSet {
            shots: Vec::new(),
            grid_size,
        }
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Shot> {
        self.shots.iter()
    }
}

/// Feasible ranges for shot geometry and dose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShotBounds {
    pub w_min: i64,
    pub w_max: i64,
    pub h_min: i64,
    pub h_max: i64,
    pub d_min: f64,
    pub d_max: f64,
}

impl Default for ShotBounds {
    fn default() -> Self {
        ShotBounds {
            w_min: 1,
            w_max: 64,
            h_min: 1,
            h_max: 64,
            d_min: 0.5,
            d_max: 2.0,
        }
    }
}

impl ShotBounds {
    pub fn validate(&self) -> Result<()> {
        if self.w_min < 1 {
            return Err(Error::invalid("w_min must be at least 1 pixel"));
        }
        if self.w_max < self.w_min {
            return Err(Error::invalid("w_max must be at least w_min"));
        }
        if self.h_min < 1 {
            return Err(Error::invalid("h_min must be at least 1 pixel"));
        }
        if self.h_max < self.h_min {
            return Err(Error::invalid("h_max must be at least h_min"));
        }
        if !(self.d_min >= 0.0) {
            return Err(Error::invalid("d_min must be nonnegative"));
        }
        if self.d_max < self.d_min {
            return Err(Error::invalid("d_max must be at least d_min"));
        }
        Ok(())
    }

    pub fn default_dose(&self) -> f64 {
        0.5 * (self.d_min + self.d_max)
    }
}

/// Physical constants of the exposure and resist model.
///
/// `sigma_f` and `sigma_b` are the forward- and backscatter ranges in
/// pixels, `eta` the backscatter-to-forward energy ratio, `theta_z` the
/// resist sigmoid steepness, and `e_th` the resist threshold energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EblParams {
    pub sigma_f: f64,
    pub sigma_b: f64,
    pub eta: f64,
    pub theta_z: f64,
    pub e_th: f64,
}

impl Default for EblParams {
    fn default() -> Self {
        EblParams {
            sigma_f: 3.0,
            sigma_b: 30.0,
            eta: 0.8,
            theta_z: 50.0,
            e_th: 0.5,
        }
    }
}

impl EblParams {
    /// Forward-scatter weight `1 / (1 + eta)`.
    pub fn w_forward(&self) -> f64 {
        1.0 / (1.0 + self.eta)
    }

    /// Backscatter weight `eta / (1 + eta)`, computed as the complement of
    /// `w_forward` so the two sum to 1 exactly in floating point.
    pub fn w_backward(&self) -> f64 {
        1.0 - self.w_forward()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_f > 0.0) {
            return Err(Error::invalid("sigma_f must be positive"));
        }
        if !(self.sigma_b > 0.0) {
            return Err(Error::invalid("sigma_b must be positive"));
        }
        if !(self.sigma_b > self.sigma_f) {
            return Err(Error::invalid("sigma_b must exceed sigma_f"));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::invalid("eta must be nonnegative"));
        }
        if !(self.theta_z > 0.0) {
            return Err(Error::invalid("theta_z must be positive"));
        }
        if !self.e_th.is_finite() {
            return Err(Error::invalid("e_th must be finite"));
        }
        Ok(())
    }
}

/// Constants of the optical projection stage.
///
/// `sigma_o` is the aerial blur in wafer-scale pixels, `theta_p` and `i_th`
/// the print sigmoid steepness and intensity threshold, `dose_delta` the
/// relative threshold shift for the process corners, and `reduction` the
/// mask-to-wafer scale factor (fixed at 4).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OlParams {
    pub sigma_o: f64,
    pub theta_p: f64,
    pub i_th: f64,
    pub dose_delta: f64,
    pub reduction: u32,
}

impl Default for OlParams {
    fn default() -> Self {
        OlParams {
            sigma_o: 2.0,
            theta_p: 50.0,
            i_th: 0.5,
            dose_delta: 0.05,
            reduction: 4,
        }
    }
}

impl OlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_o > 0.0) {
            return Err(Error::invalid("sigma_o must be positive"));
        }
        if !(self.theta_p > 0.0) {
            return Err(Error::invalid("theta_p must be positive"));
        }
        if !(self.dose_delta >= 0.0 && self.dose_delta < 1.0) {
            return Err(Error::invalid("dose_delta must lie in [0, 1)"));
        }
        if !(self.i_th * (1.0 - self.dose_delta) > 0.0) {
            return Err(Error::invalid(
                "corner thresholds i_th*(1 +/- dose_delta) must stay positive",
            ));
        }
        if self.reduction != 4 {
            return Err(Error::invalid("reduction factor is fixed at 4"));
        }
        Ok(())
    }
}

/// Weights of the composite objective: `alpha` scales pattern fidelity,
/// `beta` the process-variation band (used only by the wafer-level mode),
/// `gamma` shot sparsity, `delta` total dose, `epsilon` pairwise overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1e-2,
            delta: 1e-6,
            epsilon: 1e-3,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "loss weight {name} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }
}

/// Checks every invariant of the exposure parameters, shot bounds, and grid
/// size, reporting the first violation by name.
pub fn validate_params(ebl: &EblParams, bounds: &ShotBounds, grid: usize) -> Result<()> {
    ebl.validate()?;
    bounds.validate()?;
    if grid == 0 {
        return Err(Error::invalid("grid size must be at least 1 pixel"));
    }
    Ok(())
}
