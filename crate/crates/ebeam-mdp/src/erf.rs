//! Scalar error-function family: `erf`, its derivative, the normalized
//! Gaussian kernel, and the 1-D erf window that every beam profile composes.
//!
//! The Gaussian convention throughout is `exp(-(x-a)^2 / sigma^2)` — the
//! argument is *not* divided by sqrt(2). Under this convention the window
//! `erf_window` and the kernel `gaussian` are exact derivatives of one
//! another, which is what the analytic shot gradients rely on.

// The coefficient tables keep their published digits, a few beyond f64.
#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

// Rational minimax approximation to erf, after FreeBSD's msun s_erf.c
// (Sun Microsystems, freely redistributable). Absolute error is below
// 1e-15 everywhere, far inside the 1e-7 contract.
const ERX: f64 = 8.45062911510467529297e-01;

// [0, 0.84375]
const EFX: f64 = 1.28379167095512586316e-01;
const EFX8: f64 = 1.02703333676410069053e+00;
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;

// [0.84375, 1.25]
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;

// [1.25, 1/0.35]
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;

// [1/0.35, 6]
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

const VERY_TINY: f64 = 2.848094538889218e-306; // 2^-1015, underflow guard
const SMALL: f64 = 3.725290298461914e-9; // 2^-28

/// Error function `erf(x) = (2/sqrt(pi)) * integral of exp(-t^2) from 0 to x`.
///
/// Odd, monotone, saturating to exactly +/-1 for `|x| >= 6`.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let (ax, sign) = if x < 0.0 { (-x, true) } else { (x, false) };
    let mag = if ax < 0.84375 {
        if ax < SMALL {
            if ax < VERY_TINY {
                0.125 * (8.0 * ax + EFX8 * ax)
            } else {
                ax + EFX * ax
            }
        } else {
            let z = ax * ax;
            let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
            let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
            ax + ax * (r / s)
        }
    } else if ax < 1.25 {
        let s = ax - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        ERX + p / q
    } else if ax >= 6.0 {
        1.0
    } else {
        let s = 1.0 / (ax * ax);
        let (r, t) = if ax < 1.0 / 0.35 {
            (
                RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
                1.0 + s
                    * (SA1
                        + s * (SA2
                            + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
            )
        } else {
            (
                RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
                1.0 + s
                    * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
            )
        };
        // Split ax into a short-mantissa head z so exp(-z*z - 0.5625) is
        // evaluated without cancellation, then correct with (z-ax)(z+ax).
        let z = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
        let tail = f64::exp(-z * z - 0.5625) * f64::exp((z - ax) * (z + ax) + r / t);
        1.0 - tail / ax
    };
    if sign {
        -mag
    } else {
        mag
    }
}

/// `d/dx erf(x) = (2/sqrt(pi)) * exp(-x^2)`.
pub fn erf_derivative(x: f64) -> f64 {
    std::f64::consts::FRAC_2_SQRT_PI * f64::exp(-x * x)
}

/// Normalized Gaussian kernel `exp(-(x-center)^2/sigma^2) / (sqrt(pi)*sigma)`.
///
/// Integrates to 1 over the real line; equals `d/dx` of the smoothed step
/// `0.5*erf((x-center)/sigma)`.
pub fn gaussian(x: f64, center: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    let t = (x - center) / sigma;
    f64::exp(-t * t) / (PI.sqrt() * sigma)
}

/// Difference of the Gaussian kernels anchored at the two window edges:
/// `gaussian(x, left+width) - gaussian(x, left)`.
///
/// This is the derivative of `erf_window` with respect to its left edge at
/// fixed width (both edges move together), and the negated derivative with
/// respect to the evaluation point `x`.
pub fn gaussian_diff(x: f64, left: f64, width: f64, sigma: f64) -> f64 {
    gaussian(x, left + width, sigma) - gaussian(x, left, sigma)
}

/// Smoothed indicator of the interval `[left, left+width]`:
/// `0.5 * (erf((x-left)/sigma) - erf((x-left-width)/sigma))`.
///
/// Nonnegative, bounded by 1 (reached only where the saturating `erf`
/// rounds both tails away), and monotone increasing in `width` at fixed `x`.
pub fn erf_window(x: f64, left: f64, width: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    debug_assert!(width >= 0.0);
    0.5 * (erf((x - left) / sigma) - erf((x - left - width) / sigma))
}
