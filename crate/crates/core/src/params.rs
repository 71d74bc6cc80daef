//! Certification knobs shared by scoring, rate estimation and extraction.

use thiserror::Error;

/// Quantum (Tsirelson) bound on the CHSH winning probability, `(2 + √2) / 4`.
pub const TSIRELSON_WIN: f64 = 0.853_553_390_593_273_8;
/// Classical bound on the CHSH winning probability.
pub const CLASSICAL_WIN: f64 = 0.75;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("parameter {name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("trial count n must be positive")]
    ZeroTrials,
}

/// How the estimation width enters the rate formula's score argument.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DeltaConvention {
    /// `p = ω·q − δ`, the form used in the abort test.
    #[default]
    ScoreShift,
    /// `p = (ω − δ)·q`, i.e. the width is taken in per-test-trial units.
    ScaledWin,
}

impl DeltaConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            DeltaConvention::ScoreShift => "score-shift",
            DeltaConvention::ScaledWin => "scaled-win",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "score-shift" | "printed" => Some(DeltaConvention::ScoreShift),
            "scaled-win" | "scaled" => Some(DeltaConvention::ScaledWin),
            _ => None,
        }
    }
}

/// Parameters of one certification run.
///
/// `omega_exp` is a winning probability in `[3/4, (2+√2)/4]`, not a violation;
/// use [`crate::chsh::Violation::to_win_probability`] to convert.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    pub n: u64,
    pub q: f64,
    pub omega_exp: f64,
    pub delta_est: f64,
    pub eps_s: f64,
    pub eps_ea: f64,
    pub t_e: u32,
    pub delta_convention: DeltaConvention,
}

impl ProtocolParams {
    /// Finite-size defaults used for the rate-vs-trials curves:
    /// `ε_s = ε_EA = 1/√n`, `δ_est = √(10/n)`, `q = 1`, `t_e = 100`.
    pub fn with_curve_defaults(n: u64, omega_exp: f64) -> Self {
        let nf = n as f64;
        Self {
            n,
            q: 1.0,
            omega_exp,
            delta_est: (10.0 / nf).sqrt(),
            eps_s: 1.0 / nf.sqrt(),
            eps_ea: 1.0 / nf.sqrt(),
            t_e: 100,
            delta_convention: DeltaConvention::ScoreShift,
        }
    }

    /// Same parameters with `n` replaced and the `n`-dependent defaults recomputed.
    pub fn rescaled(&self, n: u64) -> Self {
        let d = Self::with_curve_defaults(n, self.omega_exp);
        Self {
            q: self.q,
            t_e: self.t_e,
            delta_convention: self.delta_convention,
            ..d
        }
    }

    /// Score point `p` fed to the rate formula (per-trial score units).
    pub fn score_point(&self) -> f64 {
        match self.delta_convention {
            DeltaConvention::ScoreShift => self.omega_exp * self.q - self.delta_est,
            DeltaConvention::ScaledWin => (self.omega_exp - self.delta_est) * self.q,
        }
    }

    /// Abort threshold on the per-trial score `c`: abort iff `c < q·ω − δ`.
    pub fn abort_threshold(&self) -> f64 {
        self.omega_exp * self.q - self.delta_est
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        fn check(name: &'static str, value: f64, ok: bool, range: &'static str) -> Result<(), ParamError> {
            if ok {
                Ok(())
            } else {
                Err(ParamError::OutOfRange { name, value, range })
            }
        }
        if self.n == 0 {
            return Err(ParamError::ZeroTrials);
        }
        check("q", self.q, self.q > 0.0 && self.q <= 1.0, "(0, 1]")?;
        check(
            "omega_exp",
            self.omega_exp,
            (CLASSICAL_WIN..=TSIRELSON_WIN + 1e-15).contains(&self.omega_exp),
            "[3/4, (2+√2)/4]",
        )?;
        check(
            "delta_est",
            self.delta_est,
            (0.0..1.0).contains(&self.delta_est),
            "[0, 1)",
        )?;
        check("eps_s", self.eps_s, self.eps_s > 0.0 && self.eps_s < 1.0, "(0, 1)")?;
        check("eps_ea", self.eps_ea, self.eps_ea > 0.0 && self.eps_ea < 1.0, "(0, 1)")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsirelson_constant() {
        assert!((TSIRELSON_WIN - (2.0 + 2f64.sqrt()) / 4.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn curve_defaults_match_experiment() {
        let p = ProtocolParams::with_curve_defaults(40_000_000_000, 0.750352);
        assert!((p.eps_s - 5e-6).abs() < 1e-18);
        assert!((p.delta_est - 1.5811388e-5).abs() < 1e-12);
    }

    #[test]
    fn conventions_agree_at_q_one() {
        let mut p = ProtocolParams::with_curve_defaults(1_000_000, 0.8);
        let a = p.score_point();
        p.delta_convention = DeltaConvention::ScaledWin;
        assert_eq!(a, p.score_point());
        p.q = 0.5;
        assert!((p.score_point() - (0.8 - p.delta_est) * 0.5).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_eps() {
        let mut p = ProtocolParams::with_curve_defaults(100, 0.8);
        p.eps_s = 0.0;
        assert!(p.validate().is_err());
        p.eps_s = 0.1;
        p.q = 0.0;
        assert!(p.validate().is_err());
    }
}
