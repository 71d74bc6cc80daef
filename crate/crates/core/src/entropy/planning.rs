//! Planning tools built on the rate optimizer: spot-checking net rate,
//! minimal trial counts, and CSV curve emitters.

use std::io::{self, Write};

use super::rate::optimize_rate_unchecked;
use super::{h, EntropyError};
use crate::optimize::golden_section_max;
use crate::par;
use crate::params::{DeltaConvention, ProtocolParams, CLASSICAL_WIN};

/// Net randomness per round, `R_opt − h(q) − q`, or 0 when nothing is certified.
pub fn net_rate(params: &ProtocolParams) -> Result<f64, EntropyError> {
    params.validate()?;
    Ok(net_rate_unchecked(params))
}

fn net_rate_unchecked(params: &ProtocolParams) -> f64 {
    let cert = optimize_rate_unchecked(params);
    if !cert.certifiable {
        return 0.0;
    }
    (cert.r_opt - h(params.q) - params.q).max(0.0)
}

/// Best spot-checking probability and the net rate it achieves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanResult {
    /// `None` when no `q` yields positive net randomness.
    pub q_star: Option<f64>,
    pub r_net: f64,
}

const Q_GRID_STEP: f64 = 1e-4;

/// Maximizes the net rate over `q ∈ (0, 1]` on a grid of step `1e-4`,
/// followed by golden-section refinement around the best grid point.
pub fn optimize_q(
    n: u64,
    delta_est: f64,
    eps_s: f64,
    eps_ea: f64,
    omega_exp: f64,
    convention: DeltaConvention,
) -> Result<PlanResult, EntropyError> {
    let at = |q: f64| ProtocolParams {
        n,
        q,
        omega_exp,
        delta_est,
        eps_s,
        eps_ea,
        t_e: 0,
        delta_convention: convention,
    };
    at(1.0).validate()?;

    let steps = (1.0 / Q_GRID_STEP).round() as usize;
    let grid: Vec<f64> = (1..=steps).map(|k| k as f64 * Q_GRID_STEP).collect();
    let values = par::map(&grid, |&q| net_rate_unchecked(&at(q)));

    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    if values[best] <= 0.0 {
        return Ok(PlanResult {
            q_star: None,
            r_net: 0.0,
        });
    }
    let lo = if best == 0 { grid[0] * 0.5 } else { grid[best - 1] };
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (q, v) = golden_section_max(|q| net_rate_unchecked(&at(q)), lo, hi, 1e-9);
    let (q_star, r_net) = if v >= values[best] { (q, v) } else { (grid[best], values[best]) };
    Ok(PlanResult {
        q_star: Some(q_star),
        r_net,
    })
}

/// Least `n` with a positive certified rate when `ε_s = ε_EA = 1/√n` and
/// `δ_est = √(10/n)` (q = 1). Found by doubling then bisection.
pub fn minimal_trials(omega_exp: f64) -> Result<u64, EntropyError> {
    if omega_exp <= CLASSICAL_WIN {
        return Err(EntropyError::NoFiniteTrials(omega_exp));
    }
    let positive = |n: u64| {
        let p = ProtocolParams::with_curve_defaults(n, omega_exp);
        optimize_rate_unchecked(&p).certifiable
    };
    let mut hi = 16u64;
    while !positive(hi) {
        if hi >= 1 << 62 {
            return Err(EntropyError::NoFiniteTrials(omega_exp));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    if positive(lo) {
        // below the first probe; fall back to a full bisection from 1
        lo = 0;
    }
    // invariant: !positive(lo) (or lo = 0), positive(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if positive(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// How the `n`-dependent parameters are set along a rate-vs-trials curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CurveScaling {
    /// `ε_s = ε_EA = 1/√n`, `δ_est = √(10/n)` at every grid point.
    #[default]
    CurveDefaults,
    /// Keep the base parameters' ε and δ fixed, only `n` changes.
    Fixed,
}

/// One row of a rate curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub x: f64,
    pub r_opt: f64,
    pub p_t_star: f64,
}

pub fn rate_vs_trials(base: &ProtocolParams, ns: &[u64], scaling: CurveScaling) -> Vec<CurveRow> {
    par::map(ns, |&n| {
        let params = match scaling {
            CurveScaling::CurveDefaults => base.rescaled(n),
            CurveScaling::Fixed => ProtocolParams { n, ..*base },
        };
        let c = optimize_rate_unchecked(&params);
        CurveRow {
            x: n as f64,
            r_opt: c.r_opt,
            p_t_star: c.p_t_star,
        }
    })
}

pub fn rate_vs_violation(base: &ProtocolParams, omegas: &[f64]) -> Vec<CurveRow> {
    par::map(omegas, |&omega_exp| {
        let c = optimize_rate_unchecked(&ProtocolParams { omega_exp, ..*base });
        CurveRow {
            x: omega_exp,
            r_opt: c.r_opt,
            p_t_star: c.p_t_star,
        }
    })
}

/// 12 significant digits in scientific notation.
pub fn fmt_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes `x,r_opt,p_t_star` rows in grid order.
pub fn write_curve_csv<W: Write>(mut w: W, rows: &[CurveRow]) -> io::Result<()> {
    writeln!(w, "x,r_opt,p_t_star")?;
    for r in rows {
        writeln!(w, "{},{},{}", fmt_sig12(r.x), fmt_sig12(r.r_opt), fmt_sig12(r.p_t_star))?;
    }
    Ok(())
}
