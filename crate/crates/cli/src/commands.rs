use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use qrng_core::chsh::{abort_decision, abort_decision_for_violation, score_counts, Decision, Violation};
use qrng_core::entropy::{
    g_rate, minimal_trials, optimize_q, rate_vs_trials, rate_vs_violation, soundness_error_as_printed,
    write_curve_csv, CurveScaling, EntropyError,
};
use qrng_core::entropy::planning::fmt_sig12;
use qrng_core::spdc::{
    eberhard_optimize, efficiency_curves, simulate_each_chunk, weighted_violation, write_efficiency_csv,
};
use qrng_core::toeplitz::{
    extract_stream, fft_multiply, monobit_sanity, naive_multiply, read_seed_file, trials_to_bits, write_nist_ascii,
    write_raw_bits, BlockPlan, StreamOptions, DEFAULT_BLOCK_LEN,
};
use qrng_core::trial_data::{ingest_exact, read_counts_csv, write_counts_csv, write_trials, TrialReader};
use qrng_core::{optimize_rate, BitVector, CountsTable, TSIRELSON_WIN};

use crate::config::{Backend, OutputFormat, PipelineConfig, EXPERIMENT_TRIALS};
use crate::error::{exit, CliError};
use crate::report::{sha256_file, sha256_hex, Report};

pub const SUBCOMMANDS: [(&str, &str); 7] = [
    ("simulate", "simulate a run and write its trial file"),
    ("score", "score a trial file or counts table and apply the abort test"),
    ("certify", "certified min-entropy rate and extractable length"),
    ("extract", "Toeplitz-hash a trial file into the certified number of bits"),
    ("plan", "best spot-checking probability, net rate and minimal trial count"),
    ("eberhard", "optimal state and angles for given detection efficiencies"),
    ("curves", "write the rate and violation curves as CSV files"),
];

/// A finished subcommand: its report and the exit code to use.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub code: i32,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome { report, code: exit::OK }
    }
}

pub fn run(command: &str, config: &PipelineConfig) -> Result<Outcome, CliError> {
    let mut outcome = match command {
        "simulate" => simulate(config)?.into(),
        "score" => score(config)?,
        "certify" => certify(config)?.into(),
        "extract" => extract(config)?.into(),
        "plan" => plan(config)?.into(),
        "eberhard" => eberhard(config)?.into(),
        "curves" => curves(config)?.into(),
        other => return Err(CliError::Config(format!("unknown subcommand {other:?}"))),
    };
    outcome
        .report
        .put("provenance", crate::report::provenance(&config.canonical(), config.sim_seed));
    if let Some(path) = &config.report {
        fs::write(path, outcome.report.render()).map_err(CliError::io(path))?;
    }
    Ok(outcome)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(CliError::io(path))
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(CliError::io(path))
}

fn hash_file(path: &Path) -> Result<String, CliError> {
    sha256_file(path).map_err(CliError::io(path))
}

fn simulate(c: &PipelineConfig) -> Result<Report, CliError> {
    let path = c.require(&c.trials, "trials")?;
    let n = c.n.ok_or_else(|| CliError::Config("simulate needs n".into()))?;
    let model = c.model()?;
    let mut w = create(path)?;
    let mut table = CountsTable::default();
    simulate_each_chunk(&model, n, c.sim_seed, |chunk| {
        write_trials(&mut w, chunk).map_err(CliError::io(path))?;
        for rec in chunk.iter().filter(|r| r.test) {
            table.add(*rec);
        }
        Ok::<_, CliError>(())
    })?;
    w.flush().map_err(CliError::io(path))?;
    drop(w);
    if let Some(counts) = &c.counts {
        fs::write(counts, write_counts_csv(&table)).map_err(CliError::io(counts))?;
    }

    let predicted = weighted_violation(&model).j;
    let mut r = Report::default();
    r.put("trials", path.display());
    r.put("n", n);
    r.put("test_trials", table.total());
    r.put("sim_seed", c.sim_seed);
    r.put("mu", model.source.mu);
    r.put("law", model.source.law.name());
    r.put("r", model.state.r);
    r.put("visibility", model.state.visibility);
    r.put("eta_a", model.detector.eta_a);
    r.put("eta_b", model.detector.eta_b);
    r.put("predicted_j", predicted);
    r.put("trials_sha256", hash_file(path)?);
    r.note(format!("wrote {n} trials to {} (predicted J = {predicted:.6e})", path.display()));
    Ok(r)
}

fn score(c: &PipelineConfig) -> Result<Outcome, CliError> {
    let mut r = Report::default();
    let (table, decision, params) = match (&c.trials, &c.counts) {
        (Some(path), None) => {
            let mut table = CountsTable::default();
            let mut n = 0u64;
            let mut wins = 0u64;
            for rec in TrialReader::new(open(path)?) {
                let rec = rec.map_err(|e| CliError::trials(path, e))?;
                n += 1;
                if rec.test {
                    table.add(rec);
                    wins += qrng_core::chsh::payoff(rec.a, rec.b, rec.x, rec.y) as u64;
                }
            }
            if n == 0 {
                return Err(CliError::InsufficientData(format!("{} holds no trials", path.display())));
            }
            let params = c.protocol(Some(n))?;
            let score_c = wins as f64 / n as f64;
            r.put("source", path.display());
            r.put("n", n);
            r.put("c", score_c);
            (table, abort_decision(score_c, &params), params)
        }
        (None, Some(path)) => {
            let table = read_counts_csv(open(path)?).map_err(|e| CliError::trials(path, e))?;
            let params = c.protocol(Some(table.total()))?;
            r.put("source", path.display());
            r.put("n", table.total());
            let j = score_counts(&table)?.j_bar;
            (table, abort_decision_for_violation(Violation(j), &params), params)
        }
        _ => return Err(CliError::Config("score needs exactly one of trials and counts".into())),
    };
    let score = score_counts(&table)?;
    for (label, w) in qrng_core::trial_data::SETTING_LABELS.iter().zip(score.per_setting) {
        r.put(format!("j_{label}"), w);
    }
    r.put("j_bar", score.j_bar);
    if c.j_as_printed {
        r.put("j_bar_as_printed", score.per_setting.iter().sum::<f64>() - 3.0);
    }
    r.put("omega_obs", score.win_probability().0);
    r.put("threshold", params.abort_threshold());
    r.put("decision", decision.as_str());
    r.note(format!(
        "J = {:.5e} over {} scored trials; abort threshold {:.9} per trial: {}",
        score.j_bar,
        score.n_scored,
        params.abort_threshold(),
        decision.as_str()
    ));
    let code = if decision == Decision::Abort { exit::ABORT } else { exit::OK };
    Ok(Outcome { report: r, code })
}

fn trial_count(path: &Path) -> Result<u64, CliError> {
    Ok(fs::metadata(path).map_err(CliError::io(path))?.len())
}

fn certify(c: &PipelineConfig) -> Result<Report, CliError> {
    let n_default = match &c.trials {
        Some(path) => Some(trial_count(path)?),
        None => None,
    };
    let p = c.protocol(n_default)?;
    let cert = optimize_rate(&p)?;
    let soundness = if c.soundness_as_printed {
        soundness_error_as_printed(p.eps_s, p.eps_ea, p.t_e)
    } else {
        cert.eps_soundness
    };
    let asymptotic = g_rate(p.score_point() / p.q);
    let mut r = Report::default();
    r.put("n", p.n);
    r.put("q", p.q);
    r.put("omega_exp", p.omega_exp);
    r.put("delta_est", p.delta_est);
    r.put("eps_s", p.eps_s);
    r.put("eps_ea", p.eps_ea);
    r.put("t_e", p.t_e);
    r.put("delta_convention", p.delta_convention.as_str());
    r.put("r_opt", cert.r_opt);
    r.put("raw_rate", cert.raw_rate);
    r.put("p_t_star", cert.p_t_star);
    r.put("h_min_bound", cert.h_min_bound);
    r.put("output_length", cert.output_len);
    r.put("eps_completeness", cert.eps_completeness);
    r.put("eps_soundness", soundness);
    r.put("certifiable", cert.certifiable);
    r.put("asymptotic_rate", asymptotic);
    r.put("asymptotic_fraction", if asymptotic > 0.0 { cert.r_opt / asymptotic } else { 0.0 });
    r.note(format!(
        "{:.6e} bits/trial over {} trials: {} extractable bits",
        cert.r_opt, p.n, cert.output_len
    ));
    Ok(r)
}

fn extract(c: &PipelineConfig) -> Result<Report, CliError> {
    let trials = c.require(&c.trials, "trials")?;
    let seed = c.require(&c.seed, "seed")?;
    let output = c.require(&c.output, "output")?;
    let n_trials = trial_count(trials)?;
    if n_trials == 0 {
        return Err(CliError::InsufficientData(format!("{} holds no trials", trials.display())));
    }
    if let Some(n) = c.n.filter(|&n| n != n_trials) {
        return Err(CliError::Config(format!("n = {n} but {} holds {n_trials} trials", trials.display())));
    }
    let params = c.protocol(Some(n_trials))?;
    let cert = optimize_rate(&params)?;
    let m = c.output_len.unwrap_or(cert.output_len);
    if m == 0 {
        return Err(CliError::NothingToExtract {
            h_min: cert.h_min_bound,
            t_e: params.t_e,
        });
    }
    let m = usize::try_from(m).map_err(|_| CliError::Capacity(format!("m = {m} does not fit in memory")))?;
    let seed_file = open(seed)?;
    let bits = match c.backend {
        Backend::Blocked => {
            let opts = StreamOptions {
                plan: BlockPlan {
                    block_len: c.block_len,
                    row_block: Some(DEFAULT_BLOCK_LEN.max(c.block_len)),
                    workers: c.workers,
                    shuffle: None,
                },
                batch_blocks: 16,
            };
            extract_stream(open(trials)?, n_trials, seed_file, m, &opts)
                .map_err(|e| CliError::extract(trials, e))?
                .bits
        }
        Backend::Naive | Backend::Fft => {
            let records = ingest_exact(open(trials)?, n_trials).map_err(|e| CliError::trials(trials, e))?;
            let v = trials_to_bits(&records);
            let t = read_seed_file(seed_file, m, v.len()).map_err(|e| CliError::extract(seed, e))?;
            let product = if c.backend == Backend::Naive {
                naive_multiply(&t, &v, m)
            } else {
                fft_multiply(&t, &v, m)
            };
            product.map_err(|e| CliError::extract(trials, e))?
        }
    };
    write_output(output, &bits, c.output_format)?;

    let mut r = Report::default();
    r.put("trials", trials.display());
    r.put("n_bits", 2 * n_trials);
    r.put("h_min_bound", cert.h_min_bound);
    r.put("m", m);
    r.put("backend", format!("{:?}", c.backend).to_lowercase());
    r.put("output", output.display());
    r.put("output_sha256", sha256_hex(&bits.to_bytes()));
    r.put("seed_sha256", hash_file(seed)?);
    match monobit_sanity(&bits) {
        Ok(mb) => {
            r.put("monobit_statistic", mb.statistic);
            r.put("monobit_flagged", mb.flagged);
            r.note(format!(
                "extracted {m} bits to {}; monobit statistic {:.3}{}",
                output.display(),
                mb.statistic,
                if mb.flagged { " (FLAGGED)" } else { "" }
            ));
        }
        Err(_) => {
            r.put("monobit_flagged", "skipped");
            r.note(format!("extracted {m} bits to {}; too few for the monobit check", output.display()));
        }
    }
    Ok(r)
}

fn write_output(path: &Path, bits: &BitVector, format: OutputFormat) -> Result<(), CliError> {
    let mut w = create(path)?;
    match format {
        OutputFormat::Raw => write_raw_bits(&mut w, bits),
        OutputFormat::Nist => write_nist_ascii(&mut w, bits),
    }
    .and_then(|_| w.flush())
    .map_err(CliError::io(path))
}

fn plan(c: &PipelineConfig) -> Result<Report, CliError> {
    let p = c.protocol(Some(c.n.unwrap_or(EXPERIMENT_TRIALS)))?;
    let best = optimize_q(p.n, p.delta_est, p.eps_s, p.eps_ea, p.omega_exp, p.delta_convention)?;
    let min_n = match minimal_trials(p.omega_exp) {
        Ok(n) => n.to_string(),
        Err(EntropyError::NoFiniteTrials(_)) => "none".into(),
        Err(e) => return Err(e.into()),
    };
    let mut r = Report::default();
    r.put("n", p.n);
    r.put("omega_exp", p.omega_exp);
    r.put("delta_est", p.delta_est);
    r.put("eps_s", p.eps_s);
    r.put("eps_ea", p.eps_ea);
    r.put("delta_convention", p.delta_convention.as_str());
    r.put("q_star", best.q_star.map_or("none".to_string(), |q| q.to_string()));
    r.put("r_net", best.r_net);
    r.put("minimal_n", &min_n);
    r.note(match best.q_star {
        Some(q) => format!("best q = {q:.6}: {:.6} net bits per round", best.r_net),
        None => "no spot-checking probability gives net randomness".into(),
    });
    Ok(r)
}

fn eberhard(c: &PipelineConfig) -> Result<Report, CliError> {
    let m = c.model()?;
    let opt = eberhard_optimize(m.detector.eta_a, m.detector.eta_b, m.state.visibility)?;
    let mut r = Report::default();
    r.put("eta_a", m.detector.eta_a);
    r.put("eta_b", m.detector.eta_b);
    r.put("visibility", m.state.visibility);
    r.put("r_star", opt.r);
    r.put("alpha_a1", opt.angles.alice[0]);
    r.put("alpha_a2", opt.angles.alice[1]);
    r.put("alpha_b1", opt.angles.bob[0]);
    r.put("alpha_b2", opt.angles.bob[1]);
    r.put("j_star", opt.j);
    r.put("violates", opt.violates);
    r.note(if opt.violates {
        format!("r = {:.4} reaches J = {:.6e}", opt.r, opt.j)
    } else {
        "no state violates the CHSH bound at these efficiencies".into()
    });
    Ok(r)
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64))
        .collect()
}

fn lin_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
}

fn curves(c: &PipelineConfig) -> Result<Report, CliError> {
    let dir = c.require(&c.output, "output")?;
    let points = c.curve_points;
    if points < 2 {
        return Err(CliError::Config("curve-points must be at least 2".into()));
    }
    let base = c.protocol(None)?;
    let model = c.model()?;
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let mut r = Report::default();

    let ns: Vec<u64> = log_grid(1e6, 1e14, points).iter().map(|n| n.round() as u64).collect();
    let path = dir.join("rate_vs_trials.csv");
    write_curve_csv(create(&path)?, &rate_vs_trials(&base, &ns, CurveScaling::CurveDefaults))
        .map_err(CliError::io(&path))?;
    r.put("rate_vs_trials", path.display());

    let omegas = lin_grid(0.7501, TSIRELSON_WIN, points);
    let path = dir.join("rate_vs_violation.csv");
    write_curve_csv(create(&path)?, &rate_vs_violation(&base, &omegas)).map_err(CliError::io(&path))?;
    r.put("rate_vs_violation", path.display());

    let etas = lin_grid(2.0 / 3.0 + 1e-3, 1.0, points);
    let rows = efficiency_curves(&etas, model.state.visibility, Some(base.n))?;
    let path = dir.join("efficiency.csv");
    write_efficiency_csv(create(&path)?, &rows).map_err(CliError::io(&path))?;
    r.put("efficiency", path.display());

    let path = dir.join("violation_vs_mu.csv");
    let mut w = create(&path)?;
    let mut body = String::from("x,j,j_vacuum,j_one,j_two\n");
    for mu in log_grid(1e-3, 1.0, points) {
        let mut m = model;
        m.source.mu = mu;
        let b = weighted_violation(&m);
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig12(mu),
            fmt_sig12(b.j),
            fmt_sig12(b.j_vacuum),
            fmt_sig12(b.j_one),
            fmt_sig12(b.j_two)
        ));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(CliError::io(&path))?;
    r.put("violation_vs_mu", path.display());
    r.put("points", points);
    r.note(format!("wrote four curves of {points} points to {}", dir.display()));
    Ok(r)
}

