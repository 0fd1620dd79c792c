//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stable-sampling"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_population(path: &Path, entries: &[(&str, u64)]) {
    let mut text = String::new();
    for (q, w) in entries {
        text.push_str(&format!("{q}\t{w}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn init_is_deterministic_and_validates_flags() {
    let dir = tempfile::tempdir().unwrap();
    let state_a = dir.path().join("a.toml");
    let state_b = dir.path().join("b.toml");
    for state in [&state_a, &state_b] {
        run_ok(&[
            "init",
            "--namespace",
            "irp",
            "--variant",
            "semistable",
            "--refresh",
            "1/12",
            "--size",
            "1000",
            "--state",
            state.to_str().unwrap(),
        ]);
    }
    let a = fs::read_to_string(&state_a).unwrap();
    assert_eq!(a, fs::read_to_string(&state_b).unwrap());
    assert!(a.contains("refresh_accumulator = \"0/1\""));
    assert!(a.contains("desired_refresh = \"1/12\""));

    // conflicting flags: stable demands refresh 0
    let out = run(&[
        "init",
        "--namespace",
        "x",
        "--variant",
        "stable",
        "--refresh",
        "1/12",
        "--state",
        dir.path().join("c.toml").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stable variant requires"));

    // semistable without refresh is rejected
    let out = run(&[
        "init",
        "--namespace",
        "x",
        "--variant",
        "semistable",
        "--state",
        dir.path().join("d.toml").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn sample_is_read_only_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.toml");
    let pop = dir.path().join("pop.tsv");
    write_population(&pop, &[("cats", 10), ("dogs", 3), ("fish", 7), ("ants", 1)]);
    run_ok(&[
        "init", "--namespace", "ro", "--variant", "stable", "--size", "2",
        "--state", state.to_str().unwrap(),
    ]);
    let before = fs::read_to_string(&state).unwrap();

    let s1 = dir.path().join("s1.tsv");
    let s2 = dir.path().join("s2.tsv");
    for out in [&s1, &s2] {
        run_ok(&[
            "sample",
            "--state", state.to_str().unwrap(),
            "--population", pop.to_str().unwrap(),
            "--out", out.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        fs::read_to_string(&s1).unwrap(),
        fs::read_to_string(&s2).unwrap()
    );
    assert_eq!(before, fs::read_to_string(&state).unwrap());

    // a population smaller than N warns but succeeds
    let small = dir.path().join("small.tsv");
    write_population(&small, &[("one", 1)]);
    let out = bin()
        .args([
            "sample",
            "--state", state.to_str().unwrap(),
            "--population", small.to_str().unwrap(),
            "--out", dir.path().join("s3.tsv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("whole population"));
}

#[test]
fn srs_and_wrs_agree_on_equal_weights_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop.tsv");
    let entries: Vec<(String, u64)> = (0..50).map(|i| (format!("q{i:02}"), 5)).collect();
    let refs: Vec<(&str, u64)> = entries.iter().map(|(q, w)| (q.as_str(), *w)).collect();
    write_population(&pop, &refs);

    let mut outputs = Vec::new();
    for mode in ["srs", "wrs"] {
        let state = dir.path().join(format!("{mode}.toml"));
        let sample = dir.path().join(format!("{mode}.tsv"));
        run_ok(&[
            "init", "--namespace", "same", "--mode", mode, "--variant", "stable",
            "--size", "10", "--state", state.to_str().unwrap(),
        ]);
        run_ok(&[
            "sample",
            "--state", state.to_str().unwrap(),
            "--population", pop.to_str().unwrap(),
            "--out", sample.to_str().unwrap(),
        ]);
        let text = fs::read_to_string(&sample).unwrap();
        let queries: Vec<String> = text
            .lines()
            .skip(3)
            .map(|l| l.split('\t').nth(1).unwrap().to_string())
            .collect();
        outputs.push(queries);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn roll_advances_exactly_one_period_with_exact_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.toml");
    run_ok(&[
        "init", "--namespace", "r", "--variant", "semistable", "--refresh", "3/10",
        "--state", state.to_str().unwrap(),
    ]);
    for _ in 0..4 {
        run_ok(&["roll", "--state", state.to_str().unwrap()]);
    }
    let text = fs::read_to_string(&state).unwrap();
    // 4 * 3/10 = 12/10 -> one roll, remainder 1/5
    assert!(text.contains("refresh_accumulator = \"1/5\""), "{text}");
    assert!(text.contains("period_index = 4"));
    assert!(text.contains("s1 = \"r:1\""));
    assert!(text.contains("s2 = \"r:5\""));
}

#[test]
fn roll_then_sample_changes_only_the_refreshed_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop.tsv");
    let entries: Vec<(String, u64)> = (0..2000).map(|i| (format!("q{i:04}"), 1 + i % 9)).collect();
    let refs: Vec<(&str, u64)> = entries.iter().map(|(q, w)| (q.as_str(), *w)).collect();
    write_population(&pop, &refs);

    let state = dir.path().join("state.toml");
    run_ok(&[
        "init", "--namespace", "frac", "--variant", "semistable", "--refresh", "1/5",
        "--size", "2000", "--state", state.to_str().unwrap(),
    ]);
    let s0 = dir.path().join("s0.tsv");
    let s1 = dir.path().join("s1.tsv");
    run_ok(&[
        "sample", "--state", state.to_str().unwrap(),
        "--population", pop.to_str().unwrap(), "--out", s0.to_str().unwrap(),
    ]);
    run_ok(&["roll", "--state", state.to_str().unwrap()]);
    run_ok(&[
        "sample", "--state", state.to_str().unwrap(),
        "--population", pop.to_str().unwrap(), "--out", s1.to_str().unwrap(),
    ]);

    // with N = population size the sample lists every query; count changed keys
    let keys = |path: &Path| -> std::collections::BTreeMap<String, String> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .skip(3)
            .map(|l| {
                let f: Vec<&str> = l.split('\t').collect();
                (f[1].to_string(), f[3].to_string())
            })
            .collect()
    };
    let k0 = keys(&s0);
    let k1 = keys(&s1);
    let changed = k0.iter().filter(|(q, key)| &k1[*q] != *key).count();
    let fraction = changed as f64 / k0.len() as f64;
    // refresh 1/5, binomial 3 sigma at n=2000
    let bound = 3.0 * (0.2f64 * 0.8 / 2000.0).sqrt();
    assert!(
        (fraction - 0.2).abs() <= bound,
        "changed fraction {fraction} (bound {bound})"
    );
}

#[test]
fn overlap_and_load_reports() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop.tsv");
    write_population(&pop, &[("a", 2), ("b", 3), ("c", 5), ("d", 1)]);
    let state = dir.path().join("state.toml");
    run_ok(&[
        "init", "--namespace", "ov", "--variant", "stable", "--size", "3",
        "--state", state.to_str().unwrap(),
    ]);
    let s0 = dir.path().join("s0.tsv");
    run_ok(&[
        "sample", "--state", state.to_str().unwrap(),
        "--population", pop.to_str().unwrap(), "--out", s0.to_str().unwrap(),
    ]);

    let overlap = run_ok(&["overlap", "--a", s0.to_str().unwrap(), "--b", s0.to_str().unwrap()]);
    assert_eq!(overlap, "period_a,period_b,overlap\n0,0,1\n");

    let load = run_ok(&["load", s0.to_str().unwrap(), s0.to_str().unwrap()]);
    assert_eq!(load, "period,new_judgments\n0,3\n0,0\n");

    // size mismatch is an error
    let small_state = dir.path().join("small.toml");
    run_ok(&[
        "init", "--namespace", "ov2", "--variant", "stable", "--size", "2",
        "--state", small_state.to_str().unwrap(),
    ]);
    let s_small = dir.path().join("small.tsv");
    run_ok(&[
        "sample", "--state", small_state.to_str().unwrap(),
        "--population", pop.to_str().unwrap(), "--out", s_small.to_str().unwrap(),
    ]);
    let out = run(&["overlap", "--a", s0.to_str().unwrap(), "--b", s_small.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("different sizes"));
}

#[test]
fn churn_model_matches_printed_first_row() {
    let csv = run_ok(&["churn-model", "--base", "0.93", "--horizon", "12"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 14);
    assert_eq!(
        lines[0],
        "month_delta,natural_retention,natural_churn,refresh,refresh_churn,combined_churn,final_overlap"
    );
    let row1: Vec<f64> = lines[2]
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    let printed = [0.93, 0.07, 0.08, 0.0775, 0.15, 0.85];
    for (got, want) in row1.iter().zip(printed) {
        assert!((got - want).abs() <= 0.005, "{got} vs {want}");
    }

    let out = run(&["churn-model", "--base", "0.0"]);
    assert!(!out.status.success());
}

#[test]
fn validate_cdf_reports_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop.tsv");
    write_population(&pop, &[("a", 2), ("b", 2), ("c", 2), ("d", 2)]);
    let state = dir.path().join("state.toml");
    run_ok(&[
        "init", "--namespace", "cdf", "--variant", "stable", "--size", "4",
        "--state", state.to_str().unwrap(),
    ]);
    let sample = dir.path().join("s.tsv");
    run_ok(&[
        "sample", "--state", state.to_str().unwrap(),
        "--population", pop.to_str().unwrap(), "--out", sample.to_str().unwrap(),
    ]);
    let out = bin()
        .args([
            "validate-cdf",
            "--population", pop.to_str().unwrap(),
            "--sample", sample.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv, "threshold,population_volume_cdf,sample_count_cdf\n2,1,1\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("max deviation: 0"));
}

#[test]
fn oracle_prints_enumerated_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("tiny.tsv");
    write_population(&pop, &[("A", 2), ("B", 1), ("C", 1)]);
    let csv = run_ok(&["oracle", "--population", pop.to_str().unwrap(), "--m", "2"]);
    assert_eq!(csv, "query,probability\nA,0.833333\nB,0.583333\nC,0.583333\n");

    let out = run(&["oracle", "--population", pop.to_str().unwrap(), "--m", "5"]);
    assert!(!out.status.success());
}

#[test]
fn simulate_emits_reports_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    run_ok(&[
        "simulate",
        "--variant", "semistable",
        "--refresh", "1/10",
        "--size", "50",
        "--periods", "3",
        "--namespace", "sim",
        "--universe", "800",
        "--churn", "0.1",
        "--generator-seed", "sim-gen",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    for name in [
        "manifest.toml",
        "overlap_first_vs_each.csv",
        "overlap_consecutive.csv",
        "judgment_load.csv",
        "cdf_period_00.csv",
        "cdf_period_01.csv",
        "cdf_period_02.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let manifest = fs::read_to_string(out_dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("namespace = \"sim\""));
    assert!(manifest.contains("universe_size = 800"));
    let load = fs::read_to_string(out_dir.join("judgment_load.csv")).unwrap();
    assert_eq!(load.lines().count(), 4);
}

#[test]
fn compare_emits_all_six_approaches() {
    let csv = run_ok(&[
        "compare",
        "--size", "40",
        "--periods", "4",
        "--cadence", "2",
        "--universe", "600",
        "--churn", "0.1",
        "--generator-seed", "cmp-gen",
        "--namespace", "cmp",
    ]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], "approach,name,mean_consecutive_overlap,mean_judgment_load");
    assert!(lines[1].starts_with("1,keep-forever,1,0"));
    assert!(lines[6].starts_with("6,replace-random-subset,"));
}
