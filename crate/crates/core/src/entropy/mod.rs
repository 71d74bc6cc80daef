//! Entropy-accumulation rate bounds for CHSH-based randomness.
//!
//! The single-round rate curve `g(w)` bounds the conditional entropy of the
//! outputs given a CHSH winning probability `w`. [`rate`] turns it into the
//! finite-size bound and optimizes the tangent point; [`planning`] builds
//! the spot-checking and curve tools on top of that.

pub mod planning;
pub mod rate;

use thiserror::Error;

use crate::params::{CLASSICAL_WIN, TSIRELSON_WIN};

pub use planning::{
    minimal_trials, net_rate, optimize_q, rate_vs_trials, rate_vs_violation, write_curve_csv,
    CurveRow, CurveScaling, PlanResult,
};
pub use rate::{
    completeness_error, f_min, finite_rate, optimize_rate, soundness_error,
    soundness_error_as_printed, CertificateResult, RateQuery,
};

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("binary entropy argument {0} outside [0, 1]")]
    Domain(f64),
    #[error("tangent point p_t/q = {0} outside (3/4, (2+√2)/4)")]
    TangentOutOfRange(f64),
    #[error("expected winning probability {0} ≤ 3/4 admits no finite trial count")]
    NoFiniteTrials(f64),
    #[error(transparent)]
    Params(#[from] crate::params::ParamError),
}

/// Binary Shannon entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64, EntropyError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(EntropyError::Domain(x));
    }
    Ok(h(x))
}

pub(crate) fn h(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2() + (1.0 - x) * (1.0 - x).log2())
}

/// `s(w) = √(16w(w−1)+3)`, written as `4√((w−3/4)(w−1/4))` to keep
/// precision close to `w = 3/4`. Zero at or below the classical bound.
fn bias(w: f64) -> f64 {
    if w <= CLASSICAL_WIN {
        return 0.0;
    }
    (16.0 * (w - CLASSICAL_WIN) * (w - 0.25)).sqrt().min(1.0)
}

/// Single-round rate `g(w) = 1 − h(1/2 + s/2)` for winning probability `w`.
///
/// Clamped to 0 for `w ≤ 3/4` (the square root is imaginary on `(1/4, 3/4)`)
/// and to 1 above the quantum bound.
pub fn g_rate(w: f64) -> f64 {
    if w <= CLASSICAL_WIN {
        return 0.0;
    }
    if w >= TSIRELSON_WIN {
        return 1.0;
    }
    let s = bias(w);
    // 1 − h((1+s)/2) = [(1+s)ln(1+s) + (1−s)ln(1−s)] / (2 ln 2)
    let v = ((1.0 + s) * s.ln_1p() + (1.0 - s) * (-s).ln_1p()) / (2.0 * std::f64::consts::LN_2);
    v.clamp(0.0, 1.0)
}

/// `dg/dw = 4(2w−1)/s · log₂((1+s)/(1−s))`.
///
/// Zero below 3/4, the right-hand limit `4/ln 2` at `w = 3/4`, `+∞` at the
/// quantum bound and zero above it.
pub fn g_derivative(w: f64) -> f64 {
    if w < CLASSICAL_WIN || w > TSIRELSON_WIN {
        return 0.0;
    }
    if w >= TSIRELSON_WIN {
        return f64::INFINITY;
    }
    let s = bias(w);
    // log2((1+s)/(1-s)) / s = 2 atanh(s) / (s ln 2)
    let ratio = if s < 1e-8 { 1.0 } else { s.atanh() / s };
    8.0 * (2.0 * w - 1.0) * ratio / std::f64::consts::LN_2
}
