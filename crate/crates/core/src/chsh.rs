//! CHSH game scoring, the protocol's abort test, and the CH ↔ CHSH bridge.
//!
//! Two score units appear on public boundaries and are kept apart by type:
//! [`WinProbability`] (fraction of won games, `[0, 1]`) and [`Violation`]
//! (winning probability minus the classical bound 3/4).

use thiserror::Error;

use crate::params::{ProtocolParams, CLASSICAL_WIN};
use crate::trial_data::{CountsTable, TrialRecord, SETTING_LABELS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("setting {0} has no recorded trials")]
    EmptySetting(&'static str),
    #[error("no trials to score")]
    NoTrials,
}

/// Winning probability of the CHSH game.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct WinProbability(pub f64);

/// CHSH violation `J = w − 3/4`; positive values reject local models.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Violation(pub f64);

impl WinProbability {
    pub fn to_violation(self) -> Violation {
        Violation(self.0 - CLASSICAL_WIN)
    }
}

impl Violation {
    pub fn to_win_probability(self) -> WinProbability {
        WinProbability(self.0 + CLASSICAL_WIN)
    }
}

/// CHSH pay-off: 1 iff `a ⊕ b = x · y`.
pub fn payoff(a: bool, b: bool, x: bool, y: bool) -> u8 {
    ((a ^ b) == (x & y)) as u8
}

/// Outcome columns (`ab00, ab10, ab01, ab11` order) that win for setting `s`.
pub fn winning_outcomes(setting: usize) -> [usize; 2] {
    if setting == 3 {
        [1, 2]
    } else {
        [0, 3]
    }
}

/// Score of a counts table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameScore {
    /// Violation: mean per-setting winning fraction minus 3/4.
    pub j_bar: f64,
    /// Winning fraction per setting, `A1B1, A1B2, A2B1, A2B2`.
    pub per_setting: [f64; 4],
    pub n_scored: u64,
}

impl GameScore {
    pub fn violation(&self) -> Violation {
        Violation(self.j_bar)
    }

    pub fn win_probability(&self) -> WinProbability {
        self.violation().to_win_probability()
    }
}

/// Scores a counts table assuming uniformly chosen settings:
/// `J̄ = (Σ_s J_s)/4 − 3/4`.
///
/// When every setting has the same trial count the violation is formed from
/// one exact integer numerator, so the only rounding is the final division.
pub fn score_counts(table: &CountsTable) -> Result<GameScore, ScoreError> {
    let mut wins = [0u64; 4];
    let mut trials = [0u64; 4];
    for s in 0..4 {
        trials[s] = table.trials_per_setting(s);
        if trials[s] == 0 {
            return Err(ScoreError::EmptySetting(SETTING_LABELS[s]));
        }
        wins[s] = winning_outcomes(s).iter().map(|&o| table.counts[s][o]).sum();
    }
    let per_setting: [f64; 4] = std::array::from_fn(|s| wins[s] as f64 / trials[s] as f64);
    let j_bar = if trials.iter().all(|&t| t == trials[0]) {
        let n = trials[0] as i128;
        let numerator = wins.iter().map(|&w| w as i128).sum::<i128>() - 3 * n;
        numerator as f64 / (4 * n) as f64
    } else {
        per_setting.iter().sum::<f64>() / 4.0 - CLASSICAL_WIN
    };
    Ok(GameScore {
        j_bar,
        per_setting,
        n_scored: trials.iter().sum(),
    })
}

/// Per-trial score of a spot-checking run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialScore {
    /// `c = (Σ_{test trials} payoff) / n`; generation trials score 0.
    pub c: f64,
    pub n: u64,
    pub test_trials: u64,
}

pub fn score_trials(records: &[TrialRecord]) -> Result<TrialScore, ScoreError> {
    if records.is_empty() {
        return Err(ScoreError::NoTrials);
    }
    let mut wins = 0u64;
    let mut tests = 0u64;
    for r in records.iter().filter(|r| r.test) {
        tests += 1;
        wins += payoff(r.a, r.b, r.x, r.y) as u64;
    }
    Ok(TrialScore {
        c: wins as f64 / records.len() as f64,
        n: records.len() as u64,
        test_trials: tests,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Abort,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Continue => "continue",
            Decision::Abort => "abort",
        }
    }
}

/// Abort test on the per-trial score `c` (winning probability times `q`):
/// abort iff `c < q·ω_exp − δ_est`. A score equal to the threshold continues.
pub fn abort_decision(c: f64, params: &ProtocolParams) -> Decision {
    if c < params.abort_threshold() {
        Decision::Abort
    } else {
        Decision::Continue
    }
}

/// Abort test for a run where every trial is a test trial, given its violation.
pub fn abort_decision_for_violation(j_bar: Violation, params: &ProtocolParams) -> Decision {
    abort_decision(j_bar.to_win_probability().0 * params.q, params)
}

/// Inputs to the Clauser–Horne expression. Outcome "0" is detection in the
/// analyser's first port.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChProbabilities {
    /// `p_00(x, y)` indexed by setting (`2x + y`).
    pub p00: [f64; 4],
    /// `p_0^A(0)`.
    pub p_a0: f64,
    /// `p_0^B(0)`.
    pub p_b0: f64,
}

impl ChProbabilities {
    /// Linear combination with weight `w` added to `self`.
    pub fn add_scaled(&mut self, other: &ChProbabilities, w: f64) {
        for (a, b) in self.p00.iter_mut().zip(other.p00.iter()) {
            *a += w * b;
        }
        self.p_a0 += w * other.p_a0;
        self.p_b0 += w * other.p_b0;
    }
}

/// `J_CH = −p00(0,0) − p00(0,1) − p00(1,0) + p00(1,1) + p_0^A(0) + p_0^B(0)`.
pub fn ch_value(p: &ChProbabilities) -> f64 {
    -p.p00[0] - p.p00[1] - p.p00[2] + p.p00[3] + p.p_a0 + p.p_b0
}

/// CHSH violation from a CH value: `J_CHSH = −J_CH / 2`.
pub fn chsh_from_ch(j_ch: f64) -> f64 {
    -j_ch / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payoff_examples() {
        assert_eq!(payoff(false, false, false, false), 1);
        assert_eq!(payoff(false, true, true, true), 1);
        assert_eq!(payoff(true, true, true, true), 0);
    }

    #[test]
    fn perfect_table_scores_quarter() {
        let n = 1000;
        let t = CountsTable::new([[n, 0, 0, 0], [n, 0, 0, 0], [0, 0, 0, n], [0, 0, n, 0]]);
        let s = score_counts(&t).unwrap();
        assert_eq!(s.j_bar, 0.25);
        assert_eq!(s.per_setting, [1.0; 4]);
    }

    #[test]
    fn empty_setting_is_insufficient() {
        let t = CountsTable::new([[1, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0], [0; 4]]);
        assert_eq!(score_counts(&t), Err(ScoreError::EmptySetting("A2B2")));
    }

    #[test]
    fn trial_scores() {
        let win = TrialRecord::new(true, false, false, true, true);
        assert_eq!(score_trials(&[win; 4]).unwrap().c, 1.0);
        let gen = TrialRecord::new(false, false, false, true, true);
        let s = score_trials(&[win, win, gen, gen]).unwrap();
        assert_eq!(s.c, 0.5);
        assert_eq!(s.test_trials, 2);
        assert_eq!(score_trials(&[]), Err(ScoreError::NoTrials));
    }

    fn experiment_params() -> ProtocolParams {
        let mut p = ProtocolParams::with_curve_defaults(40_000_000_000, 0.75 + 3.52e-4);
        p.delta_est = 1.58e-5;
        p
    }

    #[test]
    fn abort_examples() {
        let p = experiment_params();
        assert!((p.abort_threshold() - 0.7503362).abs() < 1e-12);
        assert_eq!(abort_decision(0.75 + 3.5171e-4, &p), Decision::Continue);
        assert_eq!(abort_decision(0.74, &p), Decision::Abort);
        assert_eq!(abort_decision(p.abort_threshold(), &p), Decision::Continue);
        assert_eq!(
            abort_decision_for_violation(Violation(3.5171e-4), &p),
            Decision::Continue
        );
    }

    #[test]
    fn ch_examples() {
        let zero = ChProbabilities::default();
        assert_eq!(ch_value(&zero), 0.0);
        assert_eq!(chsh_from_ch(ch_value(&zero)), 0.0);
        let uniform = ChProbabilities {
            p00: [0.25; 4],
            p_a0: 0.5,
            p_b0: 0.5,
        };
        assert!((ch_value(&uniform) - 0.5).abs() < 1e-15);
        assert!((chsh_from_ch(0.5) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn unit_conversions_round_trip() {
        let v = Violation(3.52e-4);
        assert!((v.to_win_probability().to_violation().0 - v.0).abs() < 1e-16);
    }
}
