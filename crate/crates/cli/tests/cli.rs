//! End-to-end runs of the `sigsleuth` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sigsleuth"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn simulate(dir: &Path, lambda: f64, extra: &[&str]) {
    let out_dir = dir.to_str().unwrap().to_string();
    let lambda = lambda.to_string();
    let mut args = vec![
        "--seed",
        "7",
        "simulate",
        "--out-dir",
        &out_dir,
        "--background",
        "400",
        "--experimental",
        "400",
        "--lambda",
        &lambda,
    ];
    args.extend_from_slice(extra);
    assert_ok(&run(&args));
    assert!(dir.join("background.csv").exists());
    assert!(dir.join("experimental.csv").exists());
}

#[test]
fn simulate_then_test_permutation() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), 0.4, &[]);
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "--seed",
        "3",
        "test",
        "--stat",
        "mi-auc",
        "--method",
        "permutation",
        "--background",
        dir.path().join("background.csv").to_str().unwrap(),
        "--experimental",
        dir.path().join("experimental.csv").to_str().unwrap(),
        "--cycles",
        "99",
        "--trees",
        "40",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["statistic"], "mi-auc");
    assert_eq!(report["method"], "permutation");
    assert_eq!(report["B"], 99);
    assert_eq!(report["tail"], "upper");
    assert_eq!(report["alpha"], 0.05);
    assert!(report["p_value"].as_f64().unwrap() > 0.0);
    assert_eq!(report["null_quantiles"].as_array().unwrap().len(), 5);
    assert!(report["timestamp"].is_string());
}

#[test]
fn mce_report_uses_lower_tail() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), 0.0, &[]);
    let report_path = dir.path().join("mce.json");
    let out = run(&[
        "test",
        "--stat",
        "mi-mce",
        "--method",
        "bootstrap",
        "--background",
        dir.path().join("background.csv").to_str().unwrap(),
        "--experimental",
        dir.path().join("experimental.csv").to_str().unwrap(),
        "--cycles",
        "60",
        "--trees",
        "30",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["tail"], "lower");
}

#[test]
fn md_stat_without_signal_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), 0.0, &[]);
    let out = run(&[
        "test",
        "--stat",
        "md-lrt",
        "--method",
        "permutation",
        "--background",
        dir.path().join("background.csv").to_str().unwrap(),
        "--experimental",
        dir.path().join("experimental.csv").to_str().unwrap(),
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "test",
        "--stat",
        "mi-auc",
        "--method",
        "bootstrap",
        "--background",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--experimental",
        dir.path().join("nope2.csv").to_str().unwrap(),
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn supervised_test_runs_with_signal_sample() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), 0.5, &["--signal", "300"]);
    let report_path = dir.path().join("md.json");
    let out = run(&[
        "--seed",
        "5",
        "test",
        "--stat",
        "md-lrt",
        "--method",
        "bootstrap",
        "--background",
        dir.path().join("background.csv").to_str().unwrap(),
        "--experimental",
        dir.path().join("experimental.csv").to_str().unwrap(),
        "--signal",
        dir.path().join("signal.csv").to_str().unwrap(),
        "--cycles",
        "80",
        "--trees",
        "40",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["statistic"], "md-lrt");
    assert!(report["lambda_hat_mle"].is_f64());
    assert!(report["value"].as_f64().unwrap() >= 0.0);
}

#[test]
fn estimate_strength_intervals_none_emits_glm_only() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), 0.3, &[]);
    let est_path = dir.path().join("est.json");
    let out = run(&[
        "--seed",
        "11",
        "estimate-strength",
        "--background",
        dir.path().join("background.csv").to_str().unwrap(),
        "--experimental",
        dir.path().join("experimental.csv").to_str().unwrap(),
        "--threshold",
        "0.8",
        "--bin-width",
        "0.05",
        "--intervals",
        "none",
        "--trees",
        "30",
        "--out",
        est_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let est: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&est_path).unwrap()).unwrap();
    assert!(est["lambda_hat"].is_f64());
    assert!(est["lambda_hat_raw"].is_f64()); // raw, unclipped value present
    let intervals = est["intervals"].as_object().unwrap();
    assert!(intervals.contains_key("glm"));
    assert!(!intervals.contains_key("percentile"));
    assert!(est["histogram"]["counts"].as_array().is_some());
}

#[test]
fn bad_bin_tiling_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), 0.0, &[]);
    let out = run(&[
        "estimate-strength",
        "--background",
        dir.path().join("background.csv").to_str().unwrap(),
        "--experimental",
        dir.path().join("experimental.csv").to_str().unwrap(),
        "--bin-width",
        "0.03",
        "--intervals",
        "none",
        "--out",
        dir.path().join("e.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ridge_toy_subspace_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--seed",
        "2",
        "simulate",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--background",
        "1200",
        "--experimental",
        "1200",
        "--lambda",
        "0.5",
        "--toy",
        "ridges",
    ]);
    assert_ok(&out);
    let sub_path = dir.path().join("subspace.json");
    let out = run(&[
        "--seed",
        "2",
        "active-subspace",
        "--background",
        dir.path().join("background.csv").to_str().unwrap(),
        "--experimental",
        dir.path().join("experimental.csv").to_str().unwrap(),
        "--trees",
        "100",
        "--min-leaf",
        "25",
        "--smoothing",
        "2",
        "--bootstrap",
        "0",
        "--eigenvectors",
        "2",
        "--out",
        sub_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let sub: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sub_path).unwrap()).unwrap();
    let v1 = sub["eigenvectors"][0].as_array().unwrap();
    let a = v1[0].as_f64().unwrap();
    let b = v1[1].as_f64().unwrap();
    let align = (a + b).abs() / 2.0_f64.sqrt();
    assert!(align > 0.8, "first eigenvector {a},{b} not aligned with the diagonal");
    assert_eq!(sub["eigenvectors"].as_array().unwrap().len(), 2);
}

#[test]
fn reports_are_byte_identical_for_fixed_seed_and_any_workers() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), 0.2, &[]);
    let mut outputs = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "2"), ("c", "3")] {
        let path = dir.path().join(format!("report-{tag}.json"));
        let out = run(&[
            "--seed",
            "42",
            "--workers",
            workers,
            "--no-timestamp",
            "test",
            "--stat",
            "mi-lrt",
            "--method",
            "bootstrap",
            "--background",
            dir.path().join("background.csv").to_str().unwrap(),
            "--experimental",
            dir.path().join("experimental.csv").to_str().unwrap(),
            "--cycles",
            "120",
            "--trees",
            "50",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_ok(&out);
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(!text.contains("timestamp\":  \""));
}

#[test]
fn power_study_writes_csv_with_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let table_path = dir.path().join("power.csv");
    let out = run(&[
        "--seed",
        "9",
        "--no-timestamp",
        "power-study",
        "--lambdas",
        "0,0.5",
        "--background-size",
        "300",
        "--signal-size",
        "150",
        "--experimental-size",
        "300",
        "--replicates",
        "4",
        "--stats",
        "mi-auc:permutation,mi-mce:asymptotic",
        "--cycles",
        "50",
        "--trees",
        "25",
        "--out",
        table_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = std::fs::read_to_string(&table_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "statistic,method,lambda,n,replicates,rejections,power,ci_lo,ci_hi,mean_runtime_ms"
    );
    assert_eq!(lines.count(), 4); // 2 stats x 2 lambdas
    assert!(text.contains("mi-auc,permutation,0,"));
    // runtime column zeroed under --no-timestamp
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",0"), "runtime not zeroed: {line}");
    }
}

#[test]
fn preprocess_and_train_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv_in = dir.path().join("raw.csv");
    std::fs::write(
        &csv_in,
        "energy,tau_phi,lead_phi,junk\n2.718281828459045,1.0,0.5,9\n7.38905609893065,-2.0,1.5,9\n",
    )
    .unwrap();
    let csv_out = dir.path().join("clean.csv");
    let out = run(&[
        "preprocess",
        "--input",
        csv_in.to_str().unwrap(),
        "--output",
        csv_out.to_str().unwrap(),
        "--log-columns",
        "energy",
        "--drop-columns",
        "junk",
        "--phi-anchor",
        "lead_phi",
    ]);
    assert_ok(&out);
    let text = std::fs::read_to_string(&csv_out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "energy,tau_phi");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1"); // ln(e)
    assert_eq!(first[1], "0.5"); // 1.0 - 0.5

    // train on the processed file against itself (smoke test of the artifact)
    let forest_path = dir.path().join("f.json");
    let out = run(&[
        "train",
        "--class0",
        csv_out.to_str().unwrap(),
        "--class1",
        csv_out.to_str().unwrap(),
        "--trees",
        "3",
        "--min-leaf",
        "1",
        "--out",
        forest_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let forest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&forest_path).unwrap()).unwrap();
    assert_eq!(forest["format"], "sigsleuth-forest");
    assert_eq!(forest["version"], 1);
}
