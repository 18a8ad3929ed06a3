use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use psolab_service::{Client, Phase, ServerMessage};
use serde_json::Value;

fn psolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psolab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn analyze_json(args: &[&str]) -> Value {
    let o = psolab(args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

const SMALL: [&str; 8] = ["--dims", "4", "--particles", "8", "--iters", "150", "--seed", "3"];

#[test]
fn run_writes_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = psolab(&[
        "run", "--variant", "standard", "--objective", "rastrigin", "--dims", "30", "--particles", "20", "--iters",
        "2000", "--seed", "7", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2001);
    assert!(text.starts_with("iteration,best_fitness,msd,alpha1,alpha2,omega\n"));
    assert!(stdout(&o).contains("final best fitness"));
    assert!(stdout(&o).contains("final msd"));
}

#[test]
fn run_without_out_prints_csv() {
    let o = psolab(&[&["run", "--objective", "sphere"][..], &SMALL].concat());
    assert_eq!(code(&o), 0);
    let csv = stdout(&o);
    assert!(csv.starts_with("iteration,"));
    assert_eq!(csv.lines().count(), 151);
    // The summary stays off stdout so the CSV is clean.
    assert!(stderr(&o).contains("final best fitness"));
    let again = psolab(&[&["run", "--objective", "sphere"][..], &SMALL].concat());
    assert_eq!(stdout(&again), csv);
    let other = psolab(&["run", "--objective", "sphere", "--iters", "150", "--dims", "4", "--particles", "8", "--seed", "4"]);
    assert_ne!(stdout(&other), csv);
}

#[test]
fn adaptive_defaults_epsilon_with_warning() {
    let o = psolab(&[&["run", "--variant", "adaptive"][..], &SMALL].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: --epsilon not given, using 0.1"));
    let explicit = psolab(&[&["run", "--variant", "adaptive", "--epsilon", "0.1"][..], &SMALL].concat());
    assert!(!stderr(&explicit).contains("warning"));
    assert_eq!(stdout(&explicit), stdout(&o));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["run", "--epsilon", "0.2"][..],
        &["run", "--variant", "eigencritical", "--rule", "independent"],
        &["batch", "--metric", "vel-norm", "--out-dir", "x"],
        &["run", "--dims", "0"],
        &["run", "--alpha1", "4.5"],
        &["run", "--objective", "ackley"],
        &["run", "--no-such-flag"],
        &["frobnicate"],
        &["analyze"],
        &["analyze", "x.csv", "--bin-size", "0"],
        &["serve", "--sample-interval-ms", "0"],
    ] {
        let o = psolab(args);
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    assert_eq!(code(&psolab(&["--help"])), 0);
    assert_eq!(code(&psolab(&["run", "--help"])), 0);
}

#[test]
fn batch_of_one_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.csv");
    let o = psolab(&[&["run", "--variant", "eigencritical", "--out", single.to_str().unwrap()][..], &SMALL].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out_dir = dir.path().join("batch");
    let o = psolab(
        &[&["batch", "--variant", "eigencritical", "--runs", "1", "--out-dir", out_dir.to_str().unwrap()][..], &SMALL]
            .concat(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(single).unwrap(), fs::read(out_dir.join("swarm_000.csv")).unwrap());
    assert!(out_dir.join("manifest.csv").exists());
    assert!(stdout(&o).contains("stddev final fitness 0\n"));
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn batch_output_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "0", "3"] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let o = psolab(
            &[&["batch", "--objective", "griewank", "--runs", "5", "--workers", workers, "--out-dir"][..], &[out_dir
                .to_str()
                .unwrap()], &SMALL]
                .concat(),
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let text = stdout(&o);
        assert!(text.starts_with("runs 5\nmean final fitness "));
        outputs.push((text.lines().take(4).collect::<Vec<_>>().join("\n"), dir_bytes(&out_dir)));
    }
    assert_eq!(outputs[0].1.len(), 6);
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn analyze_rastrigin_batch() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("rastrigin");
    let o = psolab(&[
        "batch", "--objective", "rastrigin", "--dims", "30", "--particles", "20", "--iters", "2000", "--runs", "50",
        "--seed", "1000", "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut args = vec!["analyze".to_string()];
    for i in 0..50 {
        args.push(out_dir.join(format!("swarm_{i:03}.csv")).display().to_string());
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let report = analyze_json(&args);
    assert_eq!(report["files"], 50);
    assert_eq!(report["iterations"], 2000);
    let mean = report["final_fitness"]["mean"].as_f64().unwrap();
    assert!((25.0..=60.0).contains(&mean), "mean final fitness {mean}");
    let printed: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("mean final fitness "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((printed - mean).abs() <= 1e-9 * mean.abs());
}

#[test]
fn analyze_single_adaptive_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("adaptive.csv");
    let o = psolab(&[
        "run", "--variant", "adaptive", "--epsilon", "0.1", "--iters", "10000", "--seed", "5", "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out_dir = dir.path().join("analysis");
    let report = analyze_json(&["analyze", trace.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    let fit = &report["power_law"];
    assert!(fit["alpha_hat"].as_f64().unwrap() > 1.0, "{fit}");
    assert!(fit["xmin_hat"].as_f64().unwrap() > 0.0);
    assert!(report["exponential"]["rate"].as_f64().unwrap() > 0.0);
    assert!(report.get("curves").is_none());
    assert!(report["non_finite_increments"].is_u64());

    let h = &report["histogram"];
    assert_eq!(h["counts"].as_array().unwrap().len(), 125);
    let counted: u64 = h["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counted + h["outside"].as_u64().unwrap(), report["increments"].as_u64().unwrap());

    let curves = fs::read_to_string(out_dir.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 10_001);
    assert!(curves.starts_with("iteration,mean_best_fitness,mean_msd,runs\n1,"));
    assert!(out_dir.join("histogram.csv").exists());
    let saved: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(saved, report);

    let log = analyze_json(&["analyze", trace.to_str().unwrap(), "--log-log", "--bin-size", "1", "--range", "0", "10", "--curves"]);
    let lh = &log["histogram"];
    assert_eq!(lh["counts"].as_array().unwrap().len(), 10);
    for p in lh["points"].as_array().unwrap() {
        let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        assert!(x < 1.0 && y >= 0.0);
    }
    assert_eq!(log["curves"]["mean_msd"].as_array().unwrap().len(), 10_000);
}

#[test]
fn analyze_reports_bad_lines_and_empty_increments() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "iteration,best_fitness,msd,alpha1,alpha2,omega\n1,2,3,1,1,1\n2,x,3,1,1,1\n").unwrap();
    let o = psolab(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.csv:3"), "{}", stderr(&o));

    let o = psolab(&["analyze", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "iteration,best_fitness,msd,alpha1,alpha2,omega\n1,2,3,1,1,1\n2,1,3,1,1,1\n3,1,2,1,1,1\n").unwrap();
    let o = psolab(&["analyze", flat.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("no positive increments"));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["notice"], "no positive increments");
    assert!(report["histogram"].is_null());
    assert!(report["power_law"].is_null());
}

#[test]
fn serve_accepts_a_client() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_psolab"))
        .args(["serve", "--bind", "127.0.0.1:0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr: std::net::SocketAddr = line.trim().strip_prefix("listening on ").expect("address line").parse().unwrap();

    let mut client = Client::connect(addr).unwrap();
    let wait = Duration::from_secs(10);
    let configure = r#"{"type":"configure","config":{"objective":"sphere","iterations":50,"dims":3}}"#;
    client.send_raw(configure).unwrap();
    assert!(matches!(client.reply(wait).unwrap(), ServerMessage::Ack { phase: Phase::Ready, .. }));
    client.send_raw(r#"{"type":"start"}"#).unwrap();
    let done = client.snapshot_where(wait, |s| s.phase == Phase::Finished).unwrap();
    assert_eq!(done.iteration, 50);

    child.kill().unwrap();
    child.wait().unwrap();
}
