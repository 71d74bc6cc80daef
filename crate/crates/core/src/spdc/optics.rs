use super::{BetaForm, DetectorModel, EberhardState, EventDistribution, PairLaw, SourceModel};

/// Ideal two-port probabilities `P[port_a][port_b]` for one pair.
pub type BornTable = [[f64; 2]; 2];

fn basis(deg: f64) -> [[f64; 2]; 2] {
    let (s, c) = deg.to_radians().sin_cos();
    [[c, s], [-s, c]]
}

/// Born rule for the Eberhard state measured at basis angles `alpha`
/// (Alice) and `beta` (Bob), in degrees.
///
/// With `x = u_H w_V` and `y = u_V w_H` for projectors `u`, `w`, the
/// probability is `(x² + r²y² + 2Vrxy)/(1+r²)`.
pub fn born_probabilities(state: &EberhardState, alpha: f64, beta: f64) -> BornTable {
    let u = basis(alpha);
    let w = basis(beta);
    let r = state.r;
    let norm = 1.0 + r * r;
    let mut p = [[0.0; 2]; 2];
    for (i, ui) in u.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            let x = ui[0] * wj[1];
            let y = ui[1] * wj[0];
            p[i][j] = ((x * x + r * r * y * y + 2.0 * state.visibility * r * x * y) / norm).max(0.0);
        }
    }
    p
}

/// Independent per-party thinning: a photon at port `i` clicks with
/// probability `η`, otherwise the party records `u`.
pub fn single_pair_distribution(born: &BornTable, det: &DetectorModel) -> EventDistribution {
    let mut d = [0.0; 9];
    for (i, row) in born.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            for (a, fa) in [(i, det.eta_a), (2, 1.0 - det.eta_a)] {
                for (b, fb) in [(j, det.eta_b), (2, 1.0 - det.eta_b)] {
                    d[3 * a + b] += p * fa * fb;
                }
            }
        }
    }
    EventDistribution(d)
}

/// Misalignment matrix: each detected outcome flips with probability `p_M`,
/// `u` is untouched. Row `i` gives the weights feeding event `i`.
pub fn gamma_matrix(pm: f64) -> [[f64; 9]; 9] {
    let s = 1.0 - pm;
    let (ss, sp, pp) = (s * s, s * pm, pm * pm);
    [
        [ss, sp, 0.0, sp, pp, 0.0, 0.0, 0.0, 0.0],
        [sp, ss, 0.0, pp, sp, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, s, 0.0, 0.0, pm, 0.0, 0.0, 0.0],
        [sp, pp, 0.0, ss, sp, 0.0, 0.0, 0.0, 0.0],
        [pp, sp, 0.0, sp, ss, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, pm, 0.0, 0.0, s, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, s, pm, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, pm, s, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ]
}

pub fn apply_misalignment(d: &EventDistribution, p_m: f64) -> EventDistribution {
    let g = gamma_matrix(p_m);
    let mut out = [0.0; 9];
    for (i, row) in g.iter().enumerate() {
        out[i] = row.iter().zip(d.0.iter()).map(|(g, p)| g * p).sum();
    }
    EventDistribution(out).normalized()
}

/// Coefficient of `p_i p_j` in the two-pair `00` coincidence probability.
pub fn beta_matrix(q0a: f64, q0b: f64, form: BetaForm) -> [[f64; 9]; 9] {
    let (a, b, ab) = (q0a, q0b, q0a * q0b);
    // event 2 (01) with event 1 (00): Bob double-clicks, so the weight is q0b;
    // event 4 (10) with event 1: Alice double-clicks, weight q0a
    let (e12, e14) = match form {
        BetaForm::Corrected => (b, a),
        BetaForm::AsPrinted => (a, b),
    };
    [
        [1.0, e12, 1.0, e14, ab, a, 1.0, b, 1.0],
        [e12, 0.0, 0.0, ab, 0.0, 0.0, b, 0.0, 0.0],
        [1.0, 0.0, 0.0, a, 0.0, 0.0, 1.0, 0.0, 0.0],
        [e14, ab, a, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [ab, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [a, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, b, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [b, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ]
}

/// Single-party counterpart over outcomes (0, 1, u).
pub fn beta_prime(q0: f64) -> [[f64; 3]; 3] {
    [[1.0, q0, 1.0], [q0, 0.0, 0.0], [1.0, 0.0, 0.0]]
}

/// Coincidence `p00` and singles `p0^A`, `p0^B` for one setting.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SinglesAndCoincidence {
    pub p00: f64,
    pub p_a0: f64,
    pub p_b0: f64,
}

impl SinglesAndCoincidence {
    pub fn from_distribution(d: &EventDistribution) -> Self {
        Self {
            p00: d.0[0],
            p_a0: d.alice_marginal()[0],
            p_b0: d.bob_marginal()[0],
        }
    }
}

fn quadratic<const N: usize>(m: &[[f64; N]; N], p: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in 0..N {
            s += m[i][j] * p[i] * p[j];
        }
    }
    s
}

/// Two independent pairs drawn from `d`, combined by threshold detectors
/// with double clicks assigned to 0 with probability `q0`.
pub fn two_pair_combine(d: &EventDistribution, det: &DetectorModel, form: BetaForm) -> SinglesAndCoincidence {
    SinglesAndCoincidence {
        p00: quadratic(&beta_matrix(det.q0_a, det.q0_b, form), &d.0),
        p_a0: quadratic(&beta_prime(det.q0_a), &d.alice_marginal()),
        p_b0: quadratic(&beta_prime(det.q0_b), &d.bob_marginal()),
    }
}

/// Dark-count probabilities with no pair emitted.
pub fn vacuum_dark(det: &DetectorModel) -> SinglesAndCoincidence {
    let pb = det.p_dark;
    SinglesAndCoincidence {
        p00: pb * pb,
        p_a0: pb,
        p_b0: pb,
    }
}

/// One-pair dark-count correction. `born` holds the port-0 probabilities of
/// the pair before loss (after misalignment). The coincidence term follows
/// the four loss cases; the singles term adds `p_B` whenever the party's own
/// port-0 detector did not fire from the photon.
pub fn dark_count_adjust(
    p: SinglesAndCoincidence,
    born: SinglesAndCoincidence,
    det: &DetectorModel,
) -> SinglesAndCoincidence {
    let pb = det.p_dark;
    let (ea, eb) = (det.eta_a, det.eta_b);
    let b00 = born.p00;
    let coincidence = b00 * ea * (1.0 - eb) * pb
        + b00 * (1.0 - ea) * eb * pb
        + b00 * (1.0 - ea) * (1.0 - eb) * pb * pb
        + (1.0 - b00) * pb * pb;
    let single = |b0: f64, eta: f64| b0 * (1.0 - eta) * pb + (1.0 - b0) * pb;
    SinglesAndCoincidence {
        p00: p.p00 + coincidence,
        p_a0: p.p_a0 + single(born.p_a0, ea),
        p_b0: p.p_b0 + single(born.p_b0, eb),
    }
}

/// `P(0..=n_max)` and the probability mass left outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonNumbers {
    pub probs: Vec<f64>,
    pub truncated: f64,
}

impl PhotonNumbers {
    pub fn p(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }
}

pub fn photon_number_dist(src: &SourceModel, n_max: usize) -> PhotonNumbers {
    let mu = src.mu;
    let probs: Vec<f64> = match src.law {
        PairLaw::Poisson => {
            let mut p = (-mu).exp();
            (0..=n_max)
                .map(|n| {
                    if n > 0 {
                        p *= mu / n as f64;
                    }
                    p
                })
                .collect()
        }
        PairLaw::Thermal | PairLaw::ThermalAsPrinted => {
            let ratio = mu / (1.0 + mu);
            let scale = if src.law == PairLaw::ThermalAsPrinted { (-mu).exp() } else { 1.0 };
            let mut p = scale / (1.0 + mu);
            (0..=n_max)
                .map(|n| {
                    if n > 0 {
                        p *= ratio;
                    }
                    p
                })
                .collect()
        }
        PairLaw::Fixed(k) => (0..=n_max).map(|n| if n == k as usize { 1.0 } else { 0.0 }).collect(),
    };
    let truncated = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    PhotonNumbers { probs, truncated }
}

#[cfg(test)]
mod tests {
    use super::super::{MeasurementAngles, Outcome};
    use super::*;
    use proptest::prelude::*;

    // ⟨u⊗w|ρ|u⊗w⟩ as a dense 4×4 product, basis HH, HV, VH, VV
    fn trace_oracle(state: &EberhardState, alpha: f64, beta: f64) -> BornTable {
        let rho = state.density_matrix();
        let u = basis(alpha);
        let w = basis(beta);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let v = [u[i][0] * w[j][0], u[i][0] * w[j][1], u[i][1] * w[j][0], u[i][1] * w[j][1]];
                let mut s = 0.0;
                for k in 0..4 {
                    for l in 0..4 {
                        s += v[k] * rho[k][l] * v[l];
                    }
                }
                out[i][j] = s;
            }
        }
        out
    }

    fn click_result(a: usize, b: usize, q0: f64) -> f64 {
        // probability the combined threshold outcome is 0
        let zero = a == 0 || b == 0;
        let one = a == 1 || b == 1;
        match (zero, one) {
            (true, true) => q0,
            (true, false) => 1.0,
            _ => 0.0,
        }
    }

    fn enumerate_two_pairs(d: &EventDistribution, q0a: f64, q0b: f64) -> SinglesAndCoincidence {
        let mut out = SinglesAndCoincidence::default();
        for i in 0..9 {
            for j in 0..9 {
                let w = d.0[i] * d.0[j];
                let pa = click_result(i / 3, j / 3, q0a);
                let pb = click_result(i % 3, j % 3, q0b);
                out.p00 += w * pa * pb;
                out.p_a0 += w * pa;
                out.p_b0 += w * pb;
            }
        }
        out
    }

    fn flip_oracle(d: &EventDistribution, pm: f64) -> EventDistribution {
        let mut out = [0.0; 9];
        let f = |o: usize| -> Vec<(usize, f64)> {
            if o == 2 {
                vec![(2, 1.0)]
            } else {
                vec![(o, 1.0 - pm), (1 - o, pm)]
            }
        };
        for (k, p) in d.0.iter().enumerate() {
            for (a, wa) in f(k / 3) {
                for (b, wb) in f(k % 3) {
                    out[3 * a + b] += p * wa * wb;
                }
            }
        }
        EventDistribution(out)
    }

    fn random_distribution(raw: [f64; 9]) -> EventDistribution {
        EventDistribution(raw).normalized()
    }

    #[test]
    fn born_examples() {
        let s = EberhardState::new(1.0, 1.0).unwrap();
        let p = born_probabilities(&s, 0.0, 0.0);
        assert!(p[0][0].abs() < 1e-15 && p[1][1].abs() < 1e-15);
        assert!((p[0][1] - 0.5).abs() < 1e-15 && (p[1][0] - 0.5).abs() < 1e-15);

        // without coherence and r = 0 the state is |HV⟩ and outcomes factorize
        let s = EberhardState::new(0.0, 0.0).unwrap();
        let p = born_probabilities(&s, 30.0, -50.0);
        let pa0 = p[0][0] + p[0][1];
        let pb0 = p[0][0] + p[1][0];
        assert!((p[0][0] - pa0 * pb0).abs() < 1e-15);

        // for r > 0 it is the mixture of the |HV⟩ and |VH⟩ product tables
        let r: f64 = 0.6;
        let mixed = born_probabilities(&EberhardState::new(r, 0.0).unwrap(), 30.0, -50.0);
        let (u, w) = (basis(30.0), basis(-50.0));
        let weight = 1.0 / (1.0 + r * r);
        for i in 0..2 {
            for j in 0..2 {
                let hv = (u[i][0] * w[j][1]).powi(2);
                let vh = (u[i][1] * w[j][0]).powi(2);
                let expect = weight * hv + (1.0 - weight) * vh;
                assert!((mixed[i][j] - expect).abs() < 1e-15, "{i}{j}");
            }
        }
    }

    #[test]
    fn born_matches_trace_oracle_at_experiment_settings() {
        let s = EberhardState::new(0.37, 0.99).unwrap();
        let ang = MeasurementAngles::EXPERIMENT;
        for x in [false, true] {
            for y in [false, true] {
                let (a, b) = ang.setting(x, y);
                let fast = born_probabilities(&s, a, b);
                let slow = trace_oracle(&s, a, b);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((fast[i][j] - slow[i][j]).abs() < 1e-12);
                    }
                }
                let total: f64 = fast.iter().flatten().sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn thinning_examples() {
        let det = |ea, eb| DetectorModel { eta_a: ea, eta_b: eb, ..DetectorModel::default() };
        let born = [[0.1, 0.2], [0.3, 0.4]];
        let d = single_pair_distribution(&born, &det(1.0, 1.0));
        assert_eq!([d.0[2], d.0[5], d.0[6], d.0[7], d.0[8]], [0.0; 5]);
        let d = single_pair_distribution(&born, &det(0.0, 0.7));
        assert!((d.0[6] + d.0[7] + d.0[8] - 1.0).abs() < 1e-15);
        let d = single_pair_distribution(&[[1.0, 0.0], [0.0, 0.0]], &det(0.8, 0.8));
        let expect = [0.64, 0.0, 0.16, 0.0, 0.0, 0.0, 0.16, 0.0, 0.04];
        for k in 0..9 {
            assert!((d.0[k] - expect[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn misalignment_examples() {
        let one = EventDistribution([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(apply_misalignment(&one, 0.0), one);
        let pm = 0.1;
        let m = apply_misalignment(&one, pm);
        assert!((m.0[0] - 0.81).abs() < 1e-15);
        assert!((m.0[1] - 0.09).abs() < 1e-15 && (m.0[3] - 0.09).abs() < 1e-15);
        assert!((m.0[4] - 0.01).abs() < 1e-15);
        let uu = EventDistribution([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(apply_misalignment(&uu, 0.3), uu);
    }

    #[test]
    fn two_pair_examples() {
        let det = DetectorModel::default();
        let half = EventDistribution([0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]);
        assert!((two_pair_combine(&half, &det, BetaForm::Corrected).p00 - 0.75).abs() < 1e-15);
        let uu = EventDistribution([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(two_pair_combine(&uu, &det, BetaForm::Corrected).p00, 0.0);
    }

    #[test]
    fn printed_beta_differs_only_when_assignments_differ() {
        let d = random_distribution([0.3, 0.2, 0.05, 0.1, 0.05, 0.05, 0.1, 0.1, 0.05]);
        let det = DetectorModel { q0_a: 0.9, q0_b: 0.2, q_u: 0.05, ..DetectorModel::default() };
        let oracle = enumerate_two_pairs(&d, 0.9, 0.2);
        let corrected = two_pair_combine(&d, &det, BetaForm::Corrected);
        let printed = two_pair_combine(&d, &det, BetaForm::AsPrinted);
        assert!((corrected.p00 - oracle.p00).abs() < 1e-12);
        assert!((printed.p00 - oracle.p00).abs() > 1e-3);
        let same = DetectorModel { q0_a: 0.4, q0_b: 0.4, ..DetectorModel::default() };
        let a = two_pair_combine(&d, &same, BetaForm::Corrected).p00;
        let b = two_pair_combine(&d, &same, BetaForm::AsPrinted).p00;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn dark_count_examples() {
        let det = DetectorModel { p_dark: 2e-6, ..DetectorModel::default() };
        assert!((vacuum_dark(&det).p00 - 4e-12).abs() < 1e-24);
        let p = SinglesAndCoincidence { p00: 0.3, p_a0: 0.5, p_b0: 0.4 };
        let born = SinglesAndCoincidence { p00: 0.35, p_a0: 0.5, p_b0: 0.45 };
        assert_eq!(dark_count_adjust(p, born, &DetectorModel::default()), p);
        let adj = dark_count_adjust(p, born, &det);
        assert!((adj.p00 - p.p00 - 0.65 * 4e-12).abs() < 1e-16);
    }

    #[test]
    fn photon_numbers() {
        let p = photon_number_dist(&SourceModel { mu: 0.15, law: PairLaw::Poisson }, 2);
        // series: e^{-0.15} = 0.860707976..., ×0.15, ×0.15²/2
        assert!((p.p(0) - 0.86071).abs() < 1e-5);
        assert!((p.p(1) - 0.12911).abs() < 1e-5);
        assert!((p.p(2) - 0.00968).abs() < 1e-5);
        assert!((p.truncated - (1.0 - p.probs.iter().sum::<f64>())).abs() < 1e-16);
        let tiny = photon_number_dist(&SourceModel { mu: 1e-9, law: PairLaw::Poisson }, 2);
        assert!((tiny.p(0) - 1.0).abs() < 1e-8);
        let th = photon_number_dist(&SourceModel { mu: 1.0, law: PairLaw::Thermal }, 10);
        for n in 0..=10 {
            assert!((th.p(n) - 0.5f64.powi(n as i32 + 1)).abs() < 1e-16);
        }
        assert!((th.truncated - 0.5f64.powi(11)).abs() < 1e-15);
        let printed = photon_number_dist(&SourceModel { mu: 1.0, law: PairLaw::ThermalAsPrinted }, 200);
        assert!((printed.probs.iter().sum::<f64>() - (-1f64).exp()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn beta_matches_enumeration(raw in proptest::array::uniform9(0.0f64..1.0),
                                    q0a in 0.0f64..=1.0, q0b in 0.0f64..=1.0) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-3);
            let d = random_distribution(raw);
            let det = DetectorModel { q0_a: q0a, q0_b: q0b, q_u: 0.0, ..DetectorModel::default() };
            let fast = two_pair_combine(&d, &det, BetaForm::Corrected);
            let slow = enumerate_two_pairs(&d, q0a, q0b);
            prop_assert!((fast.p00 - slow.p00).abs() < 1e-12);
            prop_assert!((fast.p_a0 - slow.p_a0).abs() < 1e-12);
            prop_assert!((fast.p_b0 - slow.p_b0).abs() < 1e-12);
        }

        #[test]
        fn gamma_matches_bit_flips(raw in proptest::array::uniform9(0.0f64..1.0), pm in 0.0f64..0.5) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-3);
            let d = random_distribution(raw);
            let fast = apply_misalignment(&d, pm);
            let slow = flip_oracle(&d, pm);
            for k in 0..9 {
                prop_assert!((fast.0[k] - slow.0[k]).abs() < 1e-12);
            }
            prop_assert!((fast.total() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn distributions_are_normalized(r in 0.0f64..=1.0, v in 0.0f64..=1.0, a in -180.0f64..180.0,
                                        b in -180.0f64..180.0, ea in 0.0f64..=1.0, eb in 0.0f64..=1.0) {
            let s = EberhardState::new(r, v).unwrap();
            let det = DetectorModel { eta_a: ea, eta_b: eb, ..DetectorModel::default() };
            let d = single_pair_distribution(&born_probabilities(&s, a, b), &det);
            prop_assert!(d.0.iter().all(|&p| p >= 0.0));
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
            prop_assert!(d.get(Outcome::Undetected, Outcome::Undetected) >= 0.0);
        }
    }
}
