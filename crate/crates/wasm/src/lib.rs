//! Browser bindings for the demo page in `www/`: certified rate against trial
//! count, predicted violation against pump strength, and the optimal
//! Eberhard state for given detector efficiencies.

use qrng_core::entropy::{rate_vs_trials, CurveScaling};
use qrng_core::spdc::{eberhard_optimize, weighted_violation, ExperimentModel, PairLaw};
use qrng_core::{optimize_rate, ProtocolParams, CLASSICAL_WIN, TSIRELSON_WIN};
use wasm_bindgen::prelude::*;

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64))
        .collect()
}

fn bad(message: impl Into<String>) -> JsError {
    JsError::new(&message.into())
}

/// Trial counts `10^lo ..= 10^hi` on a log grid, as used by [`rate_curve`].
#[wasm_bindgen]
pub fn trial_grid(lo_exp: f64, hi_exp: f64, points: usize) -> Vec<f64> {
    log_grid(10f64.powf(lo_exp), 10f64.powf(hi_exp), points)
}

/// Certified bits per trial for each trial count of [`trial_grid`], with
/// `ε_s = ε_EA = 1/√n` and `δ_est = √(10/n)` at every point.
#[wasm_bindgen]
pub fn rate_curve(violation: f64, lo_exp: f64, hi_exp: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let omega = CLASSICAL_WIN + violation;
    if !(omega > CLASSICAL_WIN && omega <= TSIRELSON_WIN) {
        return Err(bad(format!("violation must lie in (0, {:.6}]", TSIRELSON_WIN - CLASSICAL_WIN)));
    }
    let ns: Vec<u64> = trial_grid(lo_exp, hi_exp, points).iter().map(|n| n.round().max(1.0) as u64).collect();
    let base = ProtocolParams::with_curve_defaults(ns[0], omega);
    Ok(rate_vs_trials(&base, &ns, CurveScaling::CurveDefaults).iter().map(|r| r.r_opt).collect())
}

/// `[r_opt, output_length, p_t_star, eps_completeness, eps_soundness]` for
/// `n` trials at the given violation with the curve defaults.
#[wasm_bindgen]
pub fn certify(n: f64, violation: f64) -> Result<Vec<f64>, JsError> {
    if !(n >= 1.0) {
        return Err(bad("n must be at least 1"));
    }
    let params = ProtocolParams::with_curve_defaults(n.round() as u64, CLASSICAL_WIN + violation);
    let c = optimize_rate(&params).map_err(|e| bad(e.to_string()))?;
    Ok(vec![c.r_opt, c.output_len as f64, c.p_t_star, c.eps_completeness, c.eps_soundness])
}

/// Predicted violation of the experiment-like model at each pump strength
/// `μ` of a log grid over `[mu_lo, mu_hi]`.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn violation_vs_mu(
    eta_a: f64,
    eta_b: f64,
    visibility: f64,
    r: f64,
    p_dark: f64,
    p_misalign: f64,
    law: &str,
    mu_lo: f64,
    mu_hi: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let mut m = ExperimentModel::experiment();
    m.detector.eta_a = eta_a;
    m.detector.eta_b = eta_b;
    m.state.visibility = visibility;
    m.state.r = r;
    m.detector.p_dark = p_dark;
    m.detector.p_misalign = p_misalign;
    m.source.law = PairLaw::parse(law).ok_or_else(|| bad(format!("unknown pair law {law:?}")))?;
    if !(mu_lo > 0.0 && mu_hi > mu_lo) {
        return Err(bad("need 0 < mu_lo < mu_hi"));
    }
    log_grid(mu_lo, mu_hi, points)
        .into_iter()
        .map(|mu| {
            m.source.mu = mu;
            m.validate().map_err(|e| bad(e.to_string()))?;
            Ok(weighted_violation(&m).j)
        })
        .collect()
}

/// `[r, alpha_a1, alpha_a2, alpha_b1, alpha_b2, J]` maximizing the
/// single-pair violation at efficiency `eta` on both sides.
#[wasm_bindgen]
pub fn eberhard(eta: f64, visibility: f64) -> Result<Vec<f64>, JsError> {
    let o = eberhard_optimize(eta, eta, visibility).map_err(|e| bad(e.to_string()))?;
    Ok(vec![o.r, o.angles.alice[0], o.angles.alice[1], o.angles.bob[0], o.angles.bob[1], o.j])
}
