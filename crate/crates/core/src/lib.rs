//! Device-independent randomness from a loophole-free CHSH experiment.
//!
//! The pipeline runs trial records through CHSH scoring, bounds the
//! smooth min-entropy with entropy accumulation, and hashes the raw bits
//! with a seeded Toeplitz extractor. [`spdc`] models the photonic source
//! and detectors that produce the trial statistics.

pub mod chsh;
pub mod entropy;
pub mod optimize;
pub mod params;
pub mod spdc;
pub mod toeplitz;
pub mod trial_data;

pub(crate) mod par;

pub use chsh::{score_counts, score_trials, Decision, GameScore, Violation, WinProbability};
pub use entropy::{optimize_rate, CertificateResult, EntropyError};
pub use spdc::{weighted_violation, ExperimentModel};
pub use params::{DeltaConvention, ProtocolParams, CLASSICAL_WIN, TSIRELSON_WIN};
pub use toeplitz::{BitVector, ExtractError, ToeplitzSeed};
pub use trial_data::{CountMode, CountsTable, TrialError, TrialRecord};
