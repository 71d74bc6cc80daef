//! Finite-size min-entropy rate and its optimization over the tangent point.
//!
//! Scores `p` live in per-trial units, `p ∈ [0, q]`, so the single-round
//! curve is evaluated at `p/q` and every slope carries a `1/q` factor.

use super::{g_derivative, g_rate, EntropyError};
use crate::optimize::grid_golden_max;
use crate::params::{ProtocolParams, CLASSICAL_WIN, TSIRELSON_WIN};
use crate::toeplitz::output_length;

const TANGENT_GRID: usize = 1000;

/// A rate evaluation: protocol parameters plus tangent point `p_t` (score units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateQuery {
    pub params: ProtocolParams,
    pub p_t: f64,
}

impl RateQuery {
    pub fn new(params: ProtocolParams, p_t: f64) -> Result<Self, EntropyError> {
        let w = p_t / params.q;
        if !(w > CLASSICAL_WIN && w < TSIRELSON_WIN) {
            return Err(EntropyError::TangentOutOfRange(w));
        }
        Ok(Self { params, p_t })
    }
}

fn score_g(p: f64, q: f64) -> f64 {
    g_rate(p / q)
}

fn score_slope(p: f64, q: f64) -> f64 {
    g_derivative(p / q) / q
}

/// `g` below the tangent point, the tangent line at `p_t` above it.
pub fn f_min(p: f64, p_t: f64, q: f64) -> f64 {
    if p <= p_t {
        score_g(p, q)
    } else {
        score_g(p_t, q) + score_slope(p_t, q) * (p - p_t)
    }
}

/// `(2/√n)·√(1 − 2 log₂(ε_s·ε_EA))`, the multiplier of the finite-size penalty.
fn penalty_scale(params: &ProtocolParams) -> f64 {
    2.0 / (params.n as f64).sqrt() * (1.0 - 2.0 * (params.eps_s * params.eps_ea).log2()).sqrt()
}

fn rate_with_scale(p: f64, p_t: f64, q: f64, scale: f64) -> f64 {
    f_min(p, p_t, q) - scale * (13f64.log2() + score_slope(p_t, q))
}

/// Finite-size rate
/// `f_min(p, p_t) − (2/√n)(log₂13 + g′(p_t))·√(1 − 2 log₂(ε_s ε_EA))`.
pub fn finite_rate(p: f64, query: &RateQuery) -> f64 {
    let q = query.params.q;
    rate_with_scale(p, query.p_t, q, penalty_scale(&query.params))
}

/// Outcome of the rate optimization and what it implies for extraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateResult {
    /// Certified bits per trial, clamped at zero.
    pub r_opt: f64,
    /// Unclamped optimum, useful to see how far from feasibility a run is.
    pub raw_rate: f64,
    /// Optimal tangent point in score units.
    pub p_t_star: f64,
    /// `n · r_opt`.
    pub h_min_bound: f64,
    /// `max(0, ⌊h_min_bound⌋ − t_e)`.
    pub output_len: u64,
    pub eps_completeness: f64,
    pub eps_soundness: f64,
    /// False when no tangent point gives a positive rate.
    pub certifiable: bool,
}

/// Maximizes the finite-size rate over `p_t/q ∈ (3/4, (2+√2)/4)` with a
/// 1000-point grid followed by golden-section refinement to `|Δp_t| < 1e-12`.
pub fn optimize_rate(params: &ProtocolParams) -> Result<CertificateResult, EntropyError> {
    params.validate()?;
    Ok(optimize_rate_unchecked(params))
}

pub(crate) fn optimize_rate_unchecked(params: &ProtocolParams) -> CertificateResult {
    let q = params.q;
    let p = params.score_point();
    let scale = penalty_scale(params);
    let objective = |w_t: f64| rate_with_scale(p, w_t * q, q, scale);
    let (w_star, raw) = grid_golden_max(objective, CLASSICAL_WIN, TSIRELSON_WIN, TANGENT_GRID, 1e-12 / q);
    let certifiable = raw > 0.0;
    let r_opt = raw.max(0.0);
    let h_min_bound = params.n as f64 * r_opt;
    CertificateResult {
        r_opt,
        raw_rate: raw,
        p_t_star: w_star * q,
        h_min_bound,
        output_len: output_length(h_min_bound, params.t_e),
        eps_completeness: completeness_error(params.n as f64, params.delta_est),
        eps_soundness: soundness_error(params.eps_s, params.eps_ea, params.t_e),
        certifiable,
    }
}

/// Upper bound on the probability that an honest device aborts, `exp(−2nδ²)`.
pub fn completeness_error(n: f64, delta_est: f64) -> f64 {
    (-2.0 * n * delta_est * delta_est).exp()
}

/// `ε_s + ε_EA + 2^{−t_e}`.
pub fn soundness_error(eps_s: f64, eps_ea: f64, t_e: u32) -> f64 {
    eps_s + eps_ea + (-(t_e as f64)).exp2()
}

/// The soundness expression with a positive exponent, `ε_s + ε_EA + 2^{t_e}`,
/// kept only to audit the alternative reading.
pub fn soundness_error_as_printed(eps_s: f64, eps_ea: f64, t_e: u32) -> f64 {
    eps_s + eps_ea + (t_e as f64).exp2()
}
