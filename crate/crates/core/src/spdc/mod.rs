//! Analytic and Monte Carlo model of a photonic CHSH test with an SPDC
//! source: Eberhard states, lossy threshold detectors, multi-pair emission,
//! misalignment and dark counts.
//!
//! Detector ports are labelled 0 and 1; port 0 is the projector onto
//! `cos α|H⟩ + sin α|V⟩`. A party's outcome is 0, 1 or `u` (no click).
//! For CHSH the outcome is binarized as `a = 1` iff the outcome is 0.

mod config;
mod eberhard;
mod model;
mod monte_carlo;
mod optics;

use thiserror::Error;

pub use config::{parse_model_config, set_model_key, MODEL_KEYS};
pub use eberhard::{eberhard_optimize, efficiency_curves, write_efficiency_csv, EberhardOptimum, EfficiencyRow};
pub use model::{weighted_violation, ExperimentModel, ViolationBreakdown};
pub use monte_carlo::{simulate_chunk, simulate_counts, simulate_each_chunk, simulate_trials, CHUNK_TRIALS};
pub use optics::{
    apply_misalignment, beta_matrix, born_probabilities, dark_count_adjust, photon_number_dist,
    single_pair_distribution, two_pair_combine, vacuum_dark, BornTable, PhotonNumbers, SinglesAndCoincidence,
};

#[derive(Debug, Error, PartialEq)]
pub enum SpdcError {
    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("line {line}: {message}")]
    Config { line: usize, message: String },
}

fn check(name: &'static str, value: f64, ok: bool, range: &'static str) -> Result<(), SpdcError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(SpdcError::OutOfRange { name, value, range })
    }
}

/// `(|HV⟩ + r|VH⟩)/√(1+r²)` with its coherence damped by the visibility `V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EberhardState {
    pub r: f64,
    pub visibility: f64,
}

impl EberhardState {
    pub fn new(r: f64, visibility: f64) -> Result<Self, SpdcError> {
        let s = Self { r, visibility };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SpdcError> {
        check("r", self.r, (0.0..=1.0).contains(&self.r), "[0, 1]")?;
        check("visibility", self.visibility, (0.0..=1.0).contains(&self.visibility), "[0, 1]")
    }

    /// Density matrix in the basis HH, HV, VH, VV.
    pub fn density_matrix(&self) -> [[f64; 4]; 4] {
        let n = 1.0 / (1.0 + self.r * self.r);
        let c = self.visibility * self.r * n;
        [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, n, c, 0.0],
            [0.0, c, self.r * self.r * n, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ]
    }
}

/// Measurement basis angles in degrees, `alice[x]` and `bob[y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementAngles {
    pub alice: [f64; 2],
    pub bob: [f64; 2],
}

impl MeasurementAngles {
    /// Settings used in the reported experiment.
    pub const EXPERIMENT: Self = Self {
        alice: [-84.0, -118.7],
        bob: [6.0, -28.7],
    };

    pub fn setting(&self, x: bool, y: bool) -> (f64, f64) {
        (self.alice[x as usize], self.bob[y as usize])
    }

    /// Same bases with every angle reduced to `[0, 180)`.
    pub fn normalized(&self) -> Self {
        let f = |a: f64| a.rem_euclid(180.0);
        Self {
            alice: self.alice.map(f),
            bob: self.bob.map(f),
        }
    }
}

/// Per-party heralding efficiency, per-detector dark-count probability,
/// misalignment flip probability and double-click assignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    pub eta_a: f64,
    pub eta_b: f64,
    pub p_dark: f64,
    pub p_misalign: f64,
    pub q0_a: f64,
    pub q0_b: f64,
    /// Probability a double click is discarded as `u`; the rest goes to 1.
    pub q_u: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            eta_a: 1.0,
            eta_b: 1.0,
            p_dark: 0.0,
            p_misalign: 0.0,
            q0_a: 1.0,
            q0_b: 1.0,
            q_u: 0.0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<(), SpdcError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        check("eta_a", self.eta_a, unit(self.eta_a), "[0, 1]")?;
        check("eta_b", self.eta_b, unit(self.eta_b), "[0, 1]")?;
        check("p_dark", self.p_dark, (0.0..1.0).contains(&self.p_dark), "[0, 1)")?;
        check("p_misalign", self.p_misalign, (0.0..1.0).contains(&self.p_misalign), "[0, 1)")?;
        check("q0a", self.q0_a, unit(self.q0_a), "[0, 1]")?;
        check("q0b", self.q0_b, unit(self.q0_b), "[0, 1]")?;
        check("qu", self.q_u, unit(self.q_u), "[0, 1]")?;
        check("q0a + qu", self.q0_a + self.q_u, self.q0_a + self.q_u <= 1.0 + 1e-15, "[0, 1]")?;
        check("q0b + qu", self.q0_b + self.q_u, self.q0_b + self.q_u <= 1.0 + 1e-15, "[0, 1]")
    }
}

/// Photon-pair number law.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairLaw {
    Poisson,
    /// `μⁿ/(1+μ)^{n+1}`.
    Thermal,
    /// `μⁿ e^{−μ}/(1+μ)^{n+1}` as printed; does not sum to one.
    ThermalAsPrinted,
    /// Exactly `k` pairs every pulse, ignoring `μ`.
    Fixed(u32),
}

impl PairLaw {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "poisson" => Some(Self::Poisson),
            "thermal" => Some(Self::Thermal),
            "thermal-as-printed" => Some(Self::ThermalAsPrinted),
            _ => s.strip_prefix("fixed-").and_then(|k| k.parse().ok()).map(Self::Fixed),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Poisson => "poisson".into(),
            Self::Thermal => "thermal".into(),
            Self::ThermalAsPrinted => "thermal-as-printed".into(),
            Self::Fixed(k) => format!("fixed-{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceModel {
    pub mu: f64,
    pub law: PairLaw,
}

impl SourceModel {
    pub fn validate(&self) -> Result<(), SpdcError> {
        if matches!(self.law, PairLaw::Fixed(_)) {
            return Ok(());
        }
        check("mu", self.mu, self.mu > 0.0, "(0, ∞)")
    }
}

/// A party's outcome for one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Zero = 0,
    One = 1,
    Undetected = 2,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Zero, Outcome::One, Outcome::Undetected];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

/// Probabilities of the nine joint outcomes, index `3·A + B` with
/// `0, 1, u ↦ 0, 1, 2`: (00, 01, 0u, 10, 11, 1u, u0, u1, uu).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventDistribution(pub [f64; 9]);

impl EventDistribution {
    pub fn get(&self, a: Outcome, b: Outcome) -> f64 {
        self.0[3 * a as usize + b as usize]
    }

    pub fn alice_marginal(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.0[3 * a..3 * a + 3].iter().sum())
    }

    pub fn bob_marginal(&self) -> [f64; 3] {
        [0, 1, 2].map(|b| (0..3).map(|a| self.0[3 * a + b]).sum())
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn normalized(&self) -> Self {
        let t = self.total();
        Self(self.0.map(|p| p / t))
    }
}

/// How the two-pair coincidence matrix is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BetaForm {
    /// Entries derived by enumerating both pairs' clicks.
    #[default]
    Corrected,
    /// The published matrix, which swaps `q0a` and `q0b` in four entries.
    AsPrinted,
}

impl BetaForm {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "corrected" => Some(Self::Corrected),
            "as-printed" => Some(Self::AsPrinted),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Corrected => "corrected",
            Self::AsPrinted => "as-printed",
        }
    }
}
