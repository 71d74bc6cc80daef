//! The pipeline configuration: a flat `key = value` file whose keys are
//! also accepted as `--key value` flags. Flags override the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qrng_core::spdc::{parse_model_config, set_model_key, ExperimentModel};
use qrng_core::toeplitz::DEFAULT_BLOCK_LEN;
use qrng_core::{DeltaConvention, ProtocolParams, CLASSICAL_WIN};

use crate::error::CliError;

/// Trial count of the reported experiment.
pub const EXPERIMENT_TRIALS: u64 = 40_000_000_000;
/// Winning probability of the reported experiment, `3/4 + 3.52e-4`.
pub const EXPERIMENT_OMEGA: f64 = CLASSICAL_WIN + 3.52e-4;

/// Every configuration key with its help text.
pub const KEYS: &[(&str, &str)] = &[
    ("trials", "trial file, one byte per trial"),
    ("counts", "counts table CSV"),
    ("seed", "raw Toeplitz seed file of m + n_bits - 1 bits"),
    ("output", "output file (a directory for `curves`)"),
    ("report", "also write the key=value report to this file"),
    ("model", "model file with flat key = value lines"),
    ("n", "number of trials"),
    ("q", "spot-checking probability"),
    ("omega-exp", "expected CHSH winning probability"),
    ("j-exp", "expected violation; sets omega-exp to 3/4 + j-exp"),
    ("delta-est", "estimation width (default sqrt(10/n))"),
    ("eps-s", "smoothing parameter (default 1/sqrt(n))"),
    ("eps-ea", "entropy-accumulation error (default 1/sqrt(n))"),
    ("t-e", "extractor error exponent"),
    ("delta-convention", "score-shift | scaled-win"),
    ("soundness", "corrected | as-printed"),
    ("j-normalization", "quarter | as-printed"),
    ("sim-seed", "simulation RNG seed"),
    ("backend", "naive | fft | blocked"),
    ("block-len", "column block length of the blocked backend"),
    ("workers", "worker threads for the blocked backend"),
    ("output-format", "raw | nist"),
    ("output-len", "override the extracted length m"),
    ("curve-points", "grid points per curve"),
    ("mu", "mean photon-pair number"),
    ("law", "poisson | thermal | thermal-as-printed | fixed-K"),
    ("r", "state ratio"),
    ("visibility", "state visibility"),
    ("alpha-a1", "Alice's first angle, degrees"),
    ("alpha-a2", "Alice's second angle, degrees"),
    ("alpha-b1", "Bob's first angle, degrees"),
    ("alpha-b2", "Bob's second angle, degrees"),
    ("eta-a", "Alice's efficiency"),
    ("eta-b", "Bob's efficiency"),
    ("p-dark", "dark-count probability per detector and trial"),
    ("p-misalign", "misalignment flip probability"),
    ("q0a", "Alice's double-click probability of outcome 0"),
    ("q0b", "Bob's double-click probability of outcome 0"),
    ("qu", "double-click probability of no outcome"),
    ("beta", "corrected | as-printed"),
];

const MODEL_INLINE: [&str; 16] = [
    "mu", "law", "r", "visibility", "alpha-a1", "alpha-a2", "alpha-b1", "alpha-b2", "eta-a", "eta-b", "p-dark",
    "p-misalign", "q0a", "q0b", "qu", "beta",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    Naive,
    Fft,
    #[default]
    Blocked,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Raw,
    Nist,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub trials: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub seed: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub model_file: Option<PathBuf>,
    pub n: Option<u64>,
    pub q: f64,
    pub omega_exp: f64,
    pub delta_est: Option<f64>,
    pub eps_s: Option<f64>,
    pub eps_ea: Option<f64>,
    pub t_e: u32,
    pub delta_convention: DeltaConvention,
    pub soundness_as_printed: bool,
    pub j_as_printed: bool,
    pub sim_seed: u64,
    pub backend: Backend,
    pub block_len: usize,
    pub workers: Option<usize>,
    pub output_format: OutputFormat,
    pub output_len: Option<u64>,
    pub curve_points: usize,
    /// Inline model keys in the order they were set.
    model_keys: Vec<(String, String)>,
    /// Final text value of every key that was set, for hashing.
    raw: BTreeMap<String, String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            trials: None,
            counts: None,
            seed: None,
            output: None,
            report: None,
            model_file: None,
            n: None,
            q: 1.0,
            omega_exp: EXPERIMENT_OMEGA,
            delta_est: None,
            eps_s: None,
            eps_ea: None,
            t_e: 100,
            delta_convention: DeltaConvention::ScoreShift,
            soundness_as_printed: false,
            j_as_printed: false,
            sim_seed: 1,
            backend: Backend::Blocked,
            block_len: DEFAULT_BLOCK_LEN,
            workers: None,
            output_format: OutputFormat::Raw,
            output_len: None,
            curve_points: 25,
            model_keys: Vec::new(),
            raw: BTreeMap::new(),
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Config(format!("{key}: {value:?} is not a number")))
}

/// Integers may be written in scientific notation (`4e10`).
fn parse_count(key: &str, value: &str) -> Result<u64, CliError> {
    if let Ok(v) = value.parse::<u64>() {
        return Ok(v);
    }
    let v = parse_f64(key, value)?;
    if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(CliError::Config(format!("{key}: {value:?} is not a non-negative integer")))
    }
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T, CliError> {
    options.iter().find(|(name, _)| *name == value).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("{key}: expected one of {}, got {value:?}", names.join(" | ")))
    })
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", idx + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("line {}: {}", idx + 1, e.to_string().trim_start_matches("config: "))))?;
        }
        Ok(())
    }

    /// Sets one key. Underscores and dashes are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.replace('_', "-");
        let path = || Some(PathBuf::from(value));
        match key.as_str() {
            "trials" => self.trials = path(),
            "counts" => self.counts = path(),
            "seed" => self.seed = path(),
            "output" => self.output = path(),
            "report" => self.report = path(),
            "model" => self.model_file = path(),
            "n" => self.n = Some(parse_count(&key, value)?),
            "q" => self.q = parse_f64(&key, value)?,
            "omega-exp" => self.omega_exp = parse_f64(&key, value)?,
            "j-exp" => self.omega_exp = CLASSICAL_WIN + parse_f64(&key, value)?,
            "delta-est" => self.delta_est = Some(parse_f64(&key, value)?),
            "eps-s" => self.eps_s = Some(parse_f64(&key, value)?),
            "eps-ea" => self.eps_ea = Some(parse_f64(&key, value)?),
            "t-e" => {
                self.t_e = u32::try_from(parse_count(&key, value)?)
                    .map_err(|_| CliError::Config(format!("t-e: {value} is too large")))?
            }
            "delta-convention" => {
                self.delta_convention = DeltaConvention::parse(value)
                    .ok_or_else(|| CliError::Config(format!("delta-convention: unknown convention {value:?}")))?
            }
            "soundness" => {
                self.soundness_as_printed = choice(&key, value, &[("corrected", false), ("as-printed", true)])?
            }
            "j-normalization" => {
                self.j_as_printed = choice(&key, value, &[("quarter", false), ("as-printed", true)])?
            }
            "sim-seed" => self.sim_seed = parse_count(&key, value)?,
            "backend" => {
                self.backend = choice(
                    &key,
                    value,
                    &[("naive", Backend::Naive), ("fft", Backend::Fft), ("blocked", Backend::Blocked)],
                )?
            }
            "block-len" => self.block_len = parse_count(&key, value)? as usize,
            "workers" => self.workers = Some(parse_count(&key, value)? as usize),
            "output-format" => {
                self.output_format = choice(&key, value, &[("raw", OutputFormat::Raw), ("nist", OutputFormat::Nist)])?
            }
            "output-len" => self.output_len = Some(parse_count(&key, value)?),
            "curve-points" => self.curve_points = parse_count(&key, value)? as usize,
            k if MODEL_INLINE.contains(&k) => {
                // checked now so the error names the key; applied when the model is built
                let mut probe = ExperimentModel::experiment();
                set_model_key(&mut probe, &k.replace('-', "_"), value).map_err(CliError::Config)?;
                self.model_keys.push((k.replace('-', "_"), value.to_string()));
            }
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        self.raw.insert(key, value.to_string());
        Ok(())
    }

    /// The experiment model: defaults, then the model file, then inline keys.
    pub fn model(&self) -> Result<ExperimentModel, CliError> {
        let mut m = match &self.model_file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(CliError::io(path))?;
                parse_model_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => ExperimentModel::experiment(),
        };
        for (k, v) in &self.model_keys {
            set_model_key(&mut m, k, v).map_err(CliError::Config)?;
        }
        m.q = self.q;
        m.validate()?;
        Ok(m)
    }

    /// Protocol parameters. `n` falls back to `n_default`, then to the
    /// experiment's trial count; ε and δ default to the curve scalings in `n`.
    pub fn protocol(&self, n_default: Option<u64>) -> Result<ProtocolParams, CliError> {
        let n = self.n.or(n_default).unwrap_or(EXPERIMENT_TRIALS);
        if n == 0 {
            return Err(CliError::InsufficientData("n = 0 trials".into()));
        }
        let base = ProtocolParams::with_curve_defaults(n, self.omega_exp);
        let params = ProtocolParams {
            q: self.q,
            delta_est: self.delta_est.unwrap_or(base.delta_est),
            eps_s: self.eps_s.unwrap_or(base.eps_s),
            eps_ea: self.eps_ea.unwrap_or(base.eps_ea),
            t_e: self.t_e,
            delta_convention: self.delta_convention,
            ..base
        };
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }

    /// Sorted `key=value` lines of every key that was set.
    pub fn canonical(&self) -> String {
        self.raw.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, CliError> {
        path.as_deref().ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))
    }
}
