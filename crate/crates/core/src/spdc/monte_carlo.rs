//! Trial-by-trial sampling of the detector model.
//!
//! Trials are generated in chunks of [`CHUNK_TRIALS`]. Chunk `c` draws from
//! ChaCha8 seeded with the run seed on stream `c`, so every chunk can be
//! produced independently and the output does not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::ExperimentModel;
use super::optics::photon_number_dist;
use super::{DetectorModel, SpdcError};
use crate::par;
use crate::trial_data::{aggregate, CountMode, CountsTable, TrialRecord};

pub const CHUNK_TRIALS: u64 = 1 << 16;

/// Chunks generated in parallel before they are handed out in order.
const WAVE: u64 = 64;

struct Sampler {
    /// Cumulative Born table per setting over cells (0,0), (0,1), (1,0), (1,1).
    born_cdf: [[f64; 4]; 4],
    pair_cdf: Vec<f64>,
    det: DetectorModel,
    q: f64,
}

fn cumulative(cells: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = cells
        .into_iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(total) = out.last().copied() {
        for c in out.iter_mut() {
            *c /= total;
        }
    }
    out
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

impl Sampler {
    fn new(model: &ExperimentModel) -> Self {
        let mut born_cdf = [[0.0; 4]; 4];
        for (s, cdf) in born_cdf.iter_mut().enumerate() {
            let t = model.born(s & 2 != 0, s & 1 != 0);
            let c = cumulative([t[0][0], t[0][1], t[1][0], t[1][1]]);
            cdf.copy_from_slice(&c);
        }
        // enough orders that the neglected tail is far below f64 resolution
        let numbers = photon_number_dist(&model.source, 64);
        Self {
            born_cdf,
            pair_cdf: cumulative(numbers.probs),
            det: model.detector,
            q: model.q,
        }
    }

    fn assign<R: Rng>(rng: &mut R, clicks: [bool; 2], q0: f64, qu: f64) -> Option<u8> {
        match clicks {
            [false, false] => None,
            [true, false] => Some(0),
            [false, true] => Some(1),
            [true, true] => {
                let u: f64 = rng.random();
                if u < q0 {
                    Some(0)
                } else if u < q0 + qu {
                    None
                } else {
                    Some(1)
                }
            }
        }
    }

    fn trial<R: Rng>(&self, rng: &mut R) -> TrialRecord {
        let test = self.q >= 1.0 || rng.random::<f64>() < self.q;
        let (x, y) = if test {
            let s: u8 = rng.random_range(0..4);
            (s & 2 != 0, s & 1 != 0)
        } else {
            (false, false)
        };
        let cdf = &self.born_cdf[2 * x as usize + y as usize];
        let det = &self.det;
        let mut alice = [false; 2];
        let mut bob = [false; 2];
        let pairs = pick(&self.pair_cdf, rng.random());
        for _ in 0..pairs {
            let cell = pick(cdf, rng.random());
            let mut pa = cell >> 1;
            let mut pb = cell & 1;
            if det.p_misalign > 0.0 {
                if rng.random::<f64>() < det.p_misalign {
                    pa ^= 1;
                }
                if rng.random::<f64>() < det.p_misalign {
                    pb ^= 1;
                }
            }
            if rng.random::<f64>() < det.eta_a {
                alice[pa] = true;
            }
            if rng.random::<f64>() < det.eta_b {
                bob[pb] = true;
            }
        }
        if det.p_dark > 0.0 {
            for d in alice.iter_mut().chain(bob.iter_mut()) {
                if rng.random::<f64>() < det.p_dark {
                    *d = true;
                }
            }
        }
        let a = Self::assign(rng, alice, det.q0_a, det.q_u);
        let b = Self::assign(rng, bob, det.q0_b, det.q_u);
        // a = 1 iff the party's outcome is 0
        TrialRecord::new(test, x, y, a == Some(0), b == Some(0))
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn chunk_len(n: u64, chunk: u64) -> u64 {
    CHUNK_TRIALS.min(n - chunk * CHUNK_TRIALS)
}

/// Trials `chunk · CHUNK_TRIALS ..` of the run, `len ≤ CHUNK_TRIALS` of them.
pub fn simulate_chunk(model: &ExperimentModel, seed: u64, chunk: u64, len: u64) -> Result<Vec<TrialRecord>, SpdcError> {
    model.validate()?;
    Ok(chunk_records(&Sampler::new(model), seed, chunk, len))
}

fn chunk_records(sampler: &Sampler, seed: u64, chunk: u64, len: u64) -> Vec<TrialRecord> {
    let mut rng = chunk_rng(seed, chunk);
    (0..len).map(|_| sampler.trial(&mut rng)).collect()
}

/// `n` trials held in memory.
pub fn simulate_trials(model: &ExperimentModel, n: u64, seed: u64) -> Result<Vec<TrialRecord>, SpdcError> {
    let mut out = Vec::with_capacity(n as usize);
    simulate_each_chunk(model, n, seed, |chunk| {
        out.extend_from_slice(chunk);
        Ok::<_, SpdcError>(())
    })?;
    Ok(out)
}

/// Counts table of `n` simulated trials without keeping the records.
pub fn simulate_counts(model: &ExperimentModel, n: u64, seed: u64, mode: CountMode) -> Result<CountsTable, SpdcError> {
    model.validate()?;
    let sampler = Sampler::new(model);
    let chunks: Vec<u64> = (0..n.div_ceil(CHUNK_TRIALS)).collect();
    let tables = par::map(&chunks, |&c| {
        let recs = chunk_records(&sampler, seed, c, chunk_len(n, c));
        aggregate(recs.iter(), mode)
    });
    let mut total = CountsTable::default();
    for t in &tables {
        total.merge(t);
    }
    Ok(total)
}

/// Generates `n` trials and passes them to `sink` chunk by chunk, in order.
pub fn simulate_each_chunk<F, E>(model: &ExperimentModel, n: u64, seed: u64, mut sink: F) -> Result<(), E>
where
    F: FnMut(&[TrialRecord]) -> Result<(), E>,
    E: From<SpdcError>,
{
    model.validate()?;
    let sampler = Sampler::new(model);
    let chunks = n.div_ceil(CHUNK_TRIALS);
    let mut start = 0;
    while start < chunks {
        let wave: Vec<u64> = (start..chunks.min(start + WAVE)).collect();
        let batch = par::map(&wave, |&c| chunk_records(&sampler, seed, c, chunk_len(n, c)));
        for recs in &batch {
            sink(recs)?;
        }
        start += WAVE;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::{score_counts, score_trials};
    use crate::spdc::{weighted_violation, PairLaw, SourceModel};

    #[test]
    fn vacuum_gives_no_clicks() {
        let mut m = ExperimentModel::experiment();
        m.detector.p_dark = 0.0;
        m.source = SourceModel { mu: 1.0, law: PairLaw::Fixed(0) };
        let recs = simulate_trials(&m, 10_000, 1).unwrap();
        assert!(recs.iter().all(|r| !r.a && !r.b));
    }

    #[test]
    fn same_seed_same_stream() {
        let m = ExperimentModel::experiment();
        let a = simulate_trials(&m, 200_000, 7).unwrap();
        let b = simulate_trials(&m, 200_000, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_trials(&m, 200_000, 8).unwrap();
        assert_ne!(a, c);
        // a chunk regenerated on its own matches its slice of the run
        let second = simulate_chunk(&m, 7, 1, CHUNK_TRIALS).unwrap();
        assert_eq!(&a[CHUNK_TRIALS as usize..2 * CHUNK_TRIALS as usize], &second[..]);
    }

    #[test]
    fn spot_checking_law() {
        let mut m = ExperimentModel::ideal();
        m.q = 0.1;
        let recs = simulate_trials(&m, 100_000, 3).unwrap();
        let tests = recs.iter().filter(|r| r.test).count() as f64;
        // binomial sd ≈ 95
        assert!((tests - 10_000.0).abs() < 500.0, "{tests}");
        assert!(recs.iter().filter(|r| !r.test).all(|r| !r.x && !r.y));
    }

    fn five_sigma_check(m: &ExperimentModel, n: u64, seed: u64) {
        let predicted = weighted_violation(m).j;
        let table = simulate_counts(m, n, seed, CountMode::TestTrials).unwrap();
        let scored = score_counts(&table).unwrap().j_bar;
        // J̄ averages four win fractions, each over about n/4 trials
        let w = 0.75 + predicted;
        let sigma = (w * (1.0 - w) / n as f64).sqrt();
        assert!(
            (scored - predicted).abs() < 5.0 * sigma,
            "scored {scored}, predicted {predicted}, sigma {sigma}"
        );
    }

    #[test]
    fn ideal_model_converges() {
        five_sigma_check(&ExperimentModel::ideal(), 1_000_000, 11);
    }

    #[test]
    fn lossy_noisy_model_converges() {
        let mut m = ExperimentModel::experiment();
        m.detector.p_dark = 0.0;
        m.detector.q0_a = 0.7;
        m.detector.q0_b = 0.4;
        m.detector.q_u = 0.1;
        m.source = SourceModel { mu: 1.0, law: PairLaw::Fixed(2) };
        five_sigma_check(&m, 1_000_000, 12);
        m.source = SourceModel { mu: 1.0, law: PairLaw::Fixed(1) };
        five_sigma_check(&m, 1_000_000, 13);
    }

    #[test]
    fn records_score_like_counts() {
        let m = ExperimentModel::ideal();
        let recs = simulate_trials(&m, 100_000, 5).unwrap();
        let by_trials = score_trials(&recs).unwrap();
        assert_eq!(by_trials.n, 100_000);
    }
}
