use super::optics::{
    apply_misalignment, born_probabilities, dark_count_adjust, photon_number_dist, single_pair_distribution,
    two_pair_combine, vacuum_dark, SinglesAndCoincidence,
};
use super::{
    check, BetaForm, DetectorModel, EberhardState, EventDistribution, MeasurementAngles, PairLaw, SourceModel,
    SpdcError,
};
use crate::chsh::{ch_value, chsh_from_ch, ChProbabilities};

/// Everything needed to predict or simulate a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentModel {
    pub state: EberhardState,
    pub angles: MeasurementAngles,
    pub detector: DetectorModel,
    pub source: SourceModel,
    pub beta: BetaForm,
    /// Probability that a simulated trial is a test trial with random settings.
    pub q: f64,
}

impl ExperimentModel {
    /// Parameters close to the reported experiment: r = 0.37, its
    /// angles, heralding efficiencies 78.6 % and 80.2 %, a thermal source at
    /// μ = 0.15, `p_B = 2e-6` and `p_M = 0.002`.
    pub fn experiment() -> Self {
        Self {
            state: EberhardState {
                r: 0.37,
                visibility: 0.99,
            },
            angles: MeasurementAngles::EXPERIMENT,
            detector: DetectorModel {
                eta_a: 0.786,
                eta_b: 0.802,
                p_dark: 2e-6,
                p_misalign: 0.002,
                ..DetectorModel::default()
            },
            source: SourceModel {
                mu: 0.15,
                law: PairLaw::Thermal,
            },
            beta: BetaForm::Corrected,
            q: 1.0,
        }
    }

    /// One maximally entangled pair per trial, perfect detection and the
    /// angles that reach the quantum bound.
    pub fn ideal() -> Self {
        Self {
            state: EberhardState {
                r: 1.0,
                visibility: 1.0,
            },
            angles: MeasurementAngles {
                alice: [0.0, 45.0],
                bob: [67.5, 112.5],
            },
            detector: DetectorModel::default(),
            source: SourceModel {
                mu: 1.0,
                law: PairLaw::Fixed(1),
            },
            beta: BetaForm::Corrected,
            q: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SpdcError> {
        self.state.validate()?;
        self.detector.validate()?;
        self.source.validate()?;
        for a in self.angles.alice.iter().chain(self.angles.bob.iter()) {
            check("angle", *a, true, "finite degrees")?;
        }
        check("q", self.q, self.q > 0.0 && self.q <= 1.0, "(0, 1]")
    }

    /// Born table of one pair at setting `(x, y)`.
    pub fn born(&self, x: bool, y: bool) -> [[f64; 2]; 2] {
        let (a, b) = self.angles.setting(x, y);
        born_probabilities(&self.state, a, b)
    }

    /// One pair after loss and misalignment.
    pub fn one_pair(&self, x: bool, y: bool) -> EventDistribution {
        let d = single_pair_distribution(&self.born(x, y), &self.detector);
        apply_misalignment(&d, self.detector.p_misalign)
    }

    /// Port-0 probabilities before loss, after misalignment.
    fn lossless_ports(&self, x: bool, y: bool) -> SinglesAndCoincidence {
        let perfect = DetectorModel {
            eta_a: 1.0,
            eta_b: 1.0,
            ..self.detector
        };
        let d = single_pair_distribution(&self.born(x, y), &perfect);
        SinglesAndCoincidence::from_distribution(&apply_misalignment(&d, self.detector.p_misalign))
    }
}

/// Contributions to the predicted violation, each already weighted by the
/// photon-number probability of its order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViolationBreakdown {
    pub j: f64,
    /// Vacuum order: dark counts only.
    pub j_vacuum: f64,
    /// One pair, including its dark-count correction.
    pub j_one: f64,
    /// Two pairs.
    pub j_two: f64,
    /// `P(0), P(1), P(2)`.
    pub pair_probs: [f64; 3],
    /// Photon-number mass beyond two pairs, left out of the prediction.
    pub ignored_mass: f64,
    /// Weighted CH probabilities behind `j`.
    pub ch: ChProbabilities,
}

fn ch_from(settings: [SinglesAndCoincidence; 4]) -> ChProbabilities {
    ChProbabilities {
        p00: settings.map(|s| s.p00),
        p_a0: settings[0].p_a0,
        p_b0: settings[0].p_b0,
    }
}

const SETTINGS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

/// Predicted CHSH violation summed over vacuum, one-pair and two-pair
/// emission. CH probabilities combine linearly across orders, and the total
/// is converted with `J = −J_CH/2`.
pub fn weighted_violation(model: &ExperimentModel) -> ViolationBreakdown {
    let det = &model.detector;
    let numbers = photon_number_dist(&model.source, 2);
    let pair_probs = [numbers.p(0), numbers.p(1), numbers.p(2)];

    let vac = vacuum_dark(det);
    let vacuum = ch_from([vac; 4]);
    let one = ch_from(SETTINGS.map(|(x, y)| {
        let p = SinglesAndCoincidence::from_distribution(&model.one_pair(x, y));
        dark_count_adjust(p, model.lossless_ports(x, y), det)
    }));
    let two = ch_from(SETTINGS.map(|(x, y)| two_pair_combine(&model.one_pair(x, y), det, model.beta)));

    let mut ch = ChProbabilities::default();
    let mut parts = [0.0; 3];
    for (k, (part, p)) in [vacuum, one, two].iter().zip(pair_probs).enumerate() {
        ch.add_scaled(part, p);
        parts[k] = chsh_from_ch(p * ch_value(part));
    }
    let total_mass: f64 = pair_probs.iter().sum();
    ViolationBreakdown {
        j: chsh_from_ch(ch_value(&ch)),
        j_vacuum: parts[0],
        j_one: parts[1],
        j_two: parts[2],
        pair_probs,
        ignored_mass: (1.0 - total_mass).max(0.0),
        ch,
    }
}
