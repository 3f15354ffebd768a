//! Central finite differences, used throughout the test suite as the
//! independent oracle for analytic derivatives.

/// Symmetric two-point estimate of `df/dx` at `at`.
pub fn central_diff<F: FnMut(f64) -> f64>(mut f: F, at: f64, step: f64) -> f64 {
    (f(at + step) - f(at - step)) / (2.0 * step)
}
