use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rdcensor"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn emit_sample(dir: &Path, design: &str, n: usize, seed: u64) -> PathBuf {
    let p = dir.join(format!("{design}-{n}-{seed}.csv"));
    let out = run(&[
        "simulate",
        "--design",
        design,
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--emit-sample",
        p.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn noiseless(dir: &Path, slope: f64) -> PathBuf {
    let mut text = String::from("time,status,forcing\n");
    for i in 0..80 {
        let w = (i as f64 + 0.5) / 80.0;
        let log_t = 1.0 + slope * w + if w >= 0.5 { 0.75 } else { 0.0 };
        text.push_str(&format!("{},1,{}\n", f64::exp(log_t), w));
    }
    write(dir, &format!("lines-{slope}.csv"), &text)
}

#[test]
fn noiseless_lines_have_exact_jump_and_zero_plugin_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = noiseless(dir.path(), 0.5);
    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--cutoff",
        "0.5",
        "--bandwidth",
        "0.3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["status"], "ok");
    assert!((v["tau"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!(v["se"]["se_plugin"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["censoring_rate"], 0.0);
}

#[test]
fn noiseless_steps_have_zero_error_under_every_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let input = noiseless(dir.path(), 0.0);
    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--cutoff",
        "0.5",
        "--bandwidth",
        "0.3",
        "--se",
        "all",
        "--boot-reps",
        "10",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["tau"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    for scheme in ["se_nn", "se_plugin", "se_boot"] {
        assert!(v["se"][scheme].as_f64().unwrap() < 1e-12, "{scheme}");
    }
}

#[test]
fn constant_treatment_fails_with_weak_discontinuity() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("time,status,forcing,z\n");
    for i in 0..60 {
        let w = i as f64 / 30.0 - 1.0;
        text.push_str(&format!("{},{},{},1\n", 2.0 + (i % 7) as f64, i % 3 != 0, w));
    }
    let text = text.replace("true", "1").replace("false", "0");
    let input = write(dir.path(), "flat.csv", &text);
    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--cutoff",
        "0",
        "--design",
        "fuzzy",
        "--treatment-col",
        "z",
        "--bandwidth",
        "0.8",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    assert_eq!(v["status"], "error");
    assert_eq!(v["error"]["kind"], "WeakDiscontinuity");
    assert_eq!(v["error"]["module"], "rd_estimation");
}

#[test]
fn exit_codes_by_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "time,status,forcing\n1,1,0\n0,1,0.5\n");
    let out = run(&["estimate", "--input", bad.to_str().unwrap(), "--cutoff", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let good = emit_sample(dir.path(), "sharp", 200, 1);
    let p = good.to_str().unwrap();
    assert_eq!(
        run(&["estimate", "--input", p, "--cutoff", "0.5", "--xi", "0.9"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["estimate", "--input", p, "--cutoff", "0.5", "--model", "weibull"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["estimate", "--input", p, "--cutoff", "0", "--design", "fuzzy"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["estimate", "--input", p, "--cutoff", "0.5", "--threads", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["estimate", "--input", "/nonexistent.csv", "--cutoff", "0.5"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&["estimate", "--input", p, "--cutoff", "0.5", "--bandwidth", "0.001"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn estimate_reports_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let input = emit_sample(dir.path(), "fuzzy", 400, 5);
    let base = [
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--cutoff",
        "0",
        "--design",
        "fuzzy",
        "--treatment-col",
        "treatment",
        "--model",
        "lognormal",
        "--se",
        "all",
        "--boot-reps",
        "20",
        "--seed",
        "3",
    ];
    let with_threads = |t: &str| {
        let mut a = base.to_vec();
        a.extend(["--threads", t]);
        let out = run(&a);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let one = with_threads("1");
    assert_eq!(one, with_threads("1"));
    assert_eq!(one, with_threads("4"));
    let v: Value = serde_json::from_slice(&one).unwrap();
    assert_eq!(v["config"]["covariates"], "forcing_and_side");
    assert!(v["se"]["se_boot"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulation_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = |t: &str| dir.path().join(format!("sim{t}"));
    for t in ["1", "3"] {
        let out = run(&[
            "simulate",
            "--design",
            "sharp",
            "--n",
            "200",
            "--reps",
            "12",
            "--se",
            "all",
            "--boot-reps",
            "5",
            "--seed",
            "9",
            "--threads",
            t,
            "--output",
            prefix(t).to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for ext in ["csv", "json"] {
        let a = std::fs::read(format!("{}.{ext}", prefix("1").display())).unwrap();
        let b = std::fs::read(format!("{}.{ext}", prefix("3").display())).unwrap();
        assert_eq!(a, b, "{ext} differs");
    }
    let csv = std::fs::read_to_string(format!("{}.csv", prefix("1").display())).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("method,"));
    assert!(lines[4].starts_with("ipcw,"));
}

#[test]
fn rdplot_writes_bins_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let input = emit_sample(dir.path(), "sharp", 300, 2);
    let prefix = dir.path().join("plot");
    let out = run(&[
        "rdplot",
        "--input",
        input.to_str().unwrap(),
        "--cutoff",
        "0.5",
        "--bins-per-side",
        "4",
        "--model",
        "lognormal",
        "--output",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("plot.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("plot.json")).unwrap()).unwrap();
    assert_eq!(v["bins"].as_array().unwrap().len(), 8);
    assert_eq!(v["cutoff"], 0.5);
    let counts: u64 = v["bins"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["count"].as_u64().unwrap())
        .sum();
    assert_eq!(counts, 300);
}

#[test]
fn cutoff_outside_range_is_explained_in_the_error_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("time,status,forcing\n");
    for i in 0..100 {
        let w = i as f64 / 100.0;
        text.push_str(&format!("{},1,{}\n", 1.0 + w + (i % 5) as f64 * 0.1, w));
    }
    let input = write(dir.path(), "d.csv", &text);
    let out = run(&["estimate", "--input", input.to_str().unwrap(), "--cutoff", "1.5"]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    let w = v["warnings"].as_array().unwrap();
    assert_eq!(w.len(), 1);
    assert_eq!(w[0]["kind"], "cutoff_outside_range");
    assert_eq!(w[0]["max"], 0.99);

    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--cutoff",
        "0.5",
        "--bandwidth",
        "0.5",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    let kinds: Vec<&str> = v["warnings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, vec!["truncation"]);
}
