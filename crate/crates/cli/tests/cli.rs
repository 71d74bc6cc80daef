use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn main_table() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/counts_mu_0.15.csv")
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qrng-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn qrng(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrng")).current_dir(dir).args(args).output().unwrap()
}

fn field(out: &Output, key: &str) -> String {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

fn num(out: &Output, key: &str) -> f64 {
    field(out, key).parse().unwrap()
}

#[test]
fn scores_main_table() {
    let dir = workdir("score");
    let out = qrng(&dir, &["score", "--counts", main_table().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((num(&out, "j_bar") - 3.5171e-4).abs() < 1e-8);
    assert_eq!(field(&out, "decision"), "continue");
    assert!(field(&out, "provenance").starts_with("config_sha256:"));
}

#[test]
fn abort_has_its_own_exit_code() {
    let dir = workdir("abort");
    let out = qrng(&dir, &["score", "--counts", main_table().to_str().unwrap(), "--j-exp", "1e-3"]);
    assert_eq!(out.status.code(), Some(10));
    assert_eq!(field(&out, "decision"), "abort");
}

#[test]
fn insufficient_data() {
    let dir = workdir("empty");
    fs::write(dir.join("empty.bin"), b"").unwrap();
    assert_eq!(qrng(&dir, &["score", "--trials", "empty.bin"]).status.code(), Some(11));
    let missing = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/counts_missing_setting.csv");
    assert_eq!(qrng(&dir, &["score", "--counts", missing.to_str().unwrap()]).status.code(), Some(11));
}

#[test]
fn certify_experiment_parameters() {
    let dir = workdir("certify");
    let out = qrng(&dir, &["certify"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(((num(&out, "r_opt") - 0.00114) / 0.00114).abs() < 0.02);
    assert!((num(&out, "eps_soundness") - 1e-5).abs() < 1e-12);
    let printed = qrng(&dir, &["certify", "--soundness", "as-printed"]);
    assert!(num(&printed, "eps_soundness") > 1e30);
}

#[test]
fn plan_below_minimal_trials() {
    let dir = workdir("plan");
    let out = qrng(
        &dir,
        &["plan", "--n", "1e7", "--omega-exp", "0.8535533905932738", "--delta-est", "1e-2", "--eps-s", "1e-6", "--eps-ea", "1e-6"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(num(&out, "r_net"), 0.0);
    assert_eq!(field(&out, "q_star"), "none");
}

#[test]
fn config_file_and_flags() {
    let dir = workdir("config");
    fs::write(dir.join("run.conf"), "# simulated run\nn = 20000\nsim-seed = 5\ntrials = t.bin\nreport = r.txt\n").unwrap();
    let a = qrng(&dir, &["simulate", "-c", "run.conf"]);
    assert_eq!(a.status.code(), Some(0));
    let first = fs::read(dir.join("t.bin")).unwrap();
    assert_eq!(first.len(), 20_000);
    let report = fs::read_to_string(dir.join("r.txt")).unwrap();
    assert_eq!(report, String::from_utf8(a.stdout.clone()).unwrap());

    let b = qrng(&dir, &["simulate", "-c", "run.conf"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(dir.join("t.bin")).unwrap(), first);

    let c = qrng(&dir, &["simulate", "-c", "run.conf", "--sim-seed", "6"]);
    assert_ne!(fs::read(dir.join("t.bin")).unwrap(), first);
    assert_ne!(field(&a, "provenance"), field(&c, "provenance"));
}

#[test]
fn error_codes() {
    let dir = workdir("errors");
    assert_eq!(qrng(&dir, &["certify", "--colour", "blue"]).status.code(), Some(2));
    fs::write(dir.join("bad.conf"), "colour = blue\n").unwrap();
    assert_eq!(qrng(&dir, &["certify", "-c", "bad.conf"]).status.code(), Some(1));
    assert_eq!(qrng(&dir, &["certify", "-c", "absent.conf"]).status.code(), Some(12));
    assert_eq!(qrng(&dir, &["score"]).status.code(), Some(1));

    assert_eq!(qrng(&dir, &["simulate", "--n", "1000", "--trials", "t.bin"]).status.code(), Some(0));
    // experiment-like violation over a thousand trials certifies nothing
    let out = qrng(&dir, &["extract", "--trials", "t.bin", "--seed", "s.bin", "--output", "o.bin"]);
    assert_eq!(out.status.code(), Some(14));
    let out = qrng(&dir, &["extract", "--trials", "t.bin", "--seed", "s.bin", "--output", "o.bin", "--output-len", "64"]);
    assert_eq!(out.status.code(), Some(12));
    fs::write(dir.join("s.bin"), vec![0u8; (64 + 2000 - 1usize).div_ceil(8)]).unwrap();
    let args = ["extract", "--trials", "t.bin", "--seed", "s.bin", "--output", "o.bin", "--output-len", "64"];
    assert_eq!(qrng(&dir, &args).status.code(), Some(0));
    let mut big = args.to_vec();
    big.extend(["--block-len", "134217728"]);
    assert_eq!(qrng(&dir, &big).status.code(), Some(13));
}

#[test]
fn backends_write_identical_output() {
    let dir = workdir("backends");
    assert_eq!(qrng(&dir, &["simulate", "--n", "3000", "--trials", "t.bin", "--sim-seed", "9"]).status.code(), Some(0));
    let m = 500usize;
    let seed: Vec<u8> = (0..(m + 6000 - 1).div_ceil(8)).map(|k| (k * 37 % 251) as u8).collect();
    fs::write(dir.join("s.bin"), seed).unwrap();
    let mut outputs = Vec::new();
    for backend in ["naive", "fft", "blocked"] {
        let out = qrng(
            &dir,
            &["extract", "--trials", "t.bin", "--seed", "s.bin", "--output", "o.bin", "--output-len", "500", "--backend", backend, "--block-len", "640"],
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(dir.join("o.bin")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let nist = qrng(&dir, &["extract", "--trials", "t.bin", "--seed", "s.bin", "--output", "o.txt", "--output-len", "500", "--output-format", "nist"]);
    assert_eq!(nist.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.join("o.txt")).unwrap().lines().count(), 500);
}

#[test]
fn eberhard_and_curves() {
    let dir = workdir("curves");
    let out = qrng(&dir, &["eberhard", "--eta-a", "0.77", "--eta-b", "0.77", "--visibility", "0.99"]);
    assert!((num(&out, "r_star") - 0.37).abs() < 0.05);
    assert_eq!(field(&out, "violates"), "true");
    let out = qrng(&dir, &["curves", "--output", "c", "--curve-points", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.join("c/rate_vs_violation.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,r_opt,p_t_star"));
    assert_eq!(csv.lines().count(), 6);
    for name in ["rate_vs_trials.csv", "efficiency.csv", "violation_vs_mu.csv"] {
        assert!(dir.join("c").join(name).exists());
    }
}

#[test]
fn negative_angles_are_values() {
    let dir = workdir("negative");
    let args = [
        "simulate", "--n", "1000", "--q", "1", "--trials", "t.bin", "--law", "fixed-1", "--r", "1", "--visibility", "1",
        "--eta-a", "1", "--eta-b", "1", "--p-dark", "0", "--p-misalign", "0", "--alpha-a1", "0", "--alpha-a2", "45",
        "--alpha-b1", "-112.5", "--alpha-b2", "-67.5",
    ];
    let out = qrng(&dir, &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((num(&out, "predicted_j") - (2f64.sqrt() / 4.0 - 0.25)).abs() < 1e-9);
}
