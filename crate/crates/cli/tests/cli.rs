//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gpa")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gpa-cli-test-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn theory_writes_anchor_values() {
    let out = tmpdir("theory");
    let o = run(&[
        "theory", "--alpha", "0.5", "--beta", "1.5", "--epsilon", "0.01", "--k0", "20", "--kmax",
        "100", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));

    let j = read_json(&out.join("theory.json"));
    let lambda = j["lambda_star"].as_f64().unwrap();
    let xi = j["xi"].as_f64().unwrap();
    assert!((lambda - 1.500_094).abs() < 1e-3, "lambda {lambda}");
    assert!((xi - 0.999_937_4).abs() < 1e-4, "xi {xi}");

    let csv = fs::read_to_string(out.join("theory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "k,survival,pmf");
    assert_eq!(csv.lines().count(), 102); // header + k = 0..=100

    let prov = read_json(&out.join("provenance.json"));
    assert_eq!(prov["command"], "theory");
    assert_eq!(prov["params"]["k0"], 20);
}

#[test]
fn theory_kmax_zero_single_row() {
    let out = tmpdir("theory0");
    let o = run(&[
        "theory", "--alpha", "1", "--beta", "1", "--epsilon", "1", "--k0", "5", "--kmax", "0",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("theory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let s0: f64 = row[1].parse().unwrap();
    assert!((s0 - 1.0 / 3.0).abs() < 1e-9); // linear case survival(0) = 1/3
}

#[test]
fn theory_rejects_bad_parameters_with_input_error() {
    let out = tmpdir("theory-bad");
    let o = run(&[
        "theory", "--alpha", "-0.5", "--beta", "1.5", "--epsilon", "0.01", "--k0", "20", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
}

#[test]
fn theory_solver_failure_exit_code() {
    let out = tmpdir("theory-solver");
    let o = run(&[
        "theory", "--alpha", "1", "--beta", "1e-300", "--epsilon", "1e300", "--k0", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn grid_covers_linear_case() {
    let out = tmpdir("grid");
    let o = run(&[
        "grid", "--alpha-min", "0.5", "--alpha-max", "1.0", "--alpha-steps", "2", "--beta-min",
        "0.5", "--beta-max", "1.0", "--beta-steps", "2", "--epsilon", "1", "--k0", "20", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("grid.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "alpha,beta,epsilon,k0,lambda_star,xi");
    assert_eq!(csv.lines().count(), 5);
    // The (alpha=1, beta=1) cell is the linear model: xi = 1/2.
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let xi: f64 = last[5].parse().unwrap();
    assert!((xi - 0.5).abs() < 1e-9);
    assert!(out.join("contour.csv").exists());
}

#[test]
fn simulate_is_deterministic_and_conserves_edges() {
    let out1 = tmpdir("sim1");
    let out2 = tmpdir("sim2");
    for out in [&out1, &out2] {
        let o = run(&[
            "simulate", "--alpha", "0.5", "--beta", "1.5", "--epsilon", "0.01", "--k0", "20",
            "--n", "5000", "--m", "2", "--seed", "7", "--survival", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(out1.join("counts.csv")).unwrap();
    let b = fs::read(out2.join("counts.csv")).unwrap();
    assert_eq!(a, b, "same seed must give identical outputs");

    let total_in: u64 = String::from_utf8(a)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<u64> = l.split(',').map(|t| t.parse().unwrap()).collect();
            cols[0] * cols[1]
        })
        .sum();
    assert_eq!(total_in, 2 * (5000 - 2));
    assert!(out1.join("empirical_survival.csv").exists());

    let meta = read_json(&out1.join("metadata.json"));
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["m"], 2);
}

#[test]
fn ingest_matches_hand_count_and_reports_line_numbers() {
    let out = tmpdir("ingest");
    let input = out.join("edges.txt");
    fs::write(&input, "% header\n1 2\n3 2\n").unwrap();
    let o = run(&[
        "ingest", "--input", input.to_str().unwrap(), "--mode", "directed-in", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("counts.csv")).unwrap();
    assert_eq!(csv, "degree,count\n0,2\n2,1\n");

    let bad = out.join("bad.txt");
    fs::write(&bad, "1 2\nonly-one-token\n").unwrap();
    let o = run(&[
        "ingest", "--input", bad.to_str().unwrap(), "--mode", "directed-in", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn fit_pipeline_end_to_end() {
    let out = tmpdir("fit");
    // Ingest the bundled synthetic edge list, then fit a short chain.
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/synthetic_edges.txt");
    let o = run(&[
        "ingest", "--input", fixture, "--mode", "undirected-total", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));

    let counts = out.join("counts.csv");
    let fit_out = out.join("fitrun");
    let args = [
        "fit", "--counts", counts.to_str().unwrap(), "--l", "1", "--iters", "3000", "--burnin",
        "800", "--chains", "2", "--seed", "11", "--out", fit_out.to_str().unwrap(),
    ];
    let o = run(&args);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));

    for f in ["chain_0.csv", "chain_1.csv", "summary.json", "survival_band.csv", "pref_band.csv", "provenance.json"] {
        assert!(fit_out.join(f).exists(), "{f} missing");
    }
    let chain = fs::read_to_string(fit_out.join("chain_0.csv")).unwrap();
    assert_eq!(
        chain.lines().next().unwrap(),
        "iter,alpha,beta,epsilon,k0,lambda_star,log_post,accepted_block"
    );
    assert_eq!(chain.lines().count(), 3001);

    let summary = read_json(&fit_out.join("summary.json"));
    assert!(summary["pooled"]["beta"]["median"].as_f64().unwrap() > 0.0);
    assert_eq!(summary["chains"].as_array().unwrap().len(), 2);

    // Bands are ordered at every degree.
    let bands = fs::read_to_string(fit_out.join("survival_band.csv")).unwrap();
    for line in bands.lines().skip(1) {
        let v: Vec<f64> = line.split(',').skip(1).map(|t| t.parse().unwrap()).collect();
        assert!(v[0] <= v[1] && v[1] <= v[2], "unordered band row: {line}");
    }

    // Identical invocation reproduces the outputs byte for byte.
    let fit_out2 = out.join("fitrun2");
    let args2 = [
        "fit", "--counts", counts.to_str().unwrap(), "--l", "1", "--iters", "3000", "--burnin",
        "800", "--chains", "2", "--seed", "11", "--out", fit_out2.to_str().unwrap(),
    ];
    let o = run(&args2);
    assert!(o.status.success());
    for f in ["chain_0.csv", "chain_1.csv", "summary.json", "survival_band.csv"] {
        assert_eq!(
            fs::read(fit_out.join(f)).unwrap(),
            fs::read(fit_out2.join(f)).unwrap(),
            "{f} differs between identical invocations"
        );
    }
}

#[test]
fn fit_rejects_truncation_above_max_degree() {
    let out = tmpdir("fit-trunc");
    let counts = out.join("counts.csv");
    fs::write(&counts, "degree,count\n0,5\n3,2\n").unwrap();
    let o = run(&[
        "fit", "--counts", counts.to_str().unwrap(), "--l", "10", "--iters", "100", "--burnin",
        "10", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}
