use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn spec(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn dejong(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dejong"))
        .args(args)
        .env_remove("DEJONG_MAX_OUTCOMES")
        .output()
        .expect("binary runs")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let o = dejong(args);
    (
        o.status.code().expect("exit code"),
        String::from_utf8(o.stdout).unwrap(),
        String::from_utf8(o.stderr).unwrap(),
    )
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("report is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_str().expect("numbers are strings").parse().unwrap()
}

fn path(name: &str) -> String {
    spec(name).to_string_lossy().into_owned()
}

#[test]
fn decompose_product() {
    let (code, out, _) = run(&["decompose", &path("x1x2.json")]);
    assert_eq!(code, 0);
    let v = json(&out);
    let comps = v["components"].as_array().unwrap();
    assert_eq!(comps.len(), 1);
    assert_eq!(comps[0]["subset"], serde_json::json!([1, 2]));
    assert_eq!(v["rho2"], "1");
}

#[test]
fn malformed_spec_is_a_parse_error() {
    let (code, out, err) = run(&["decompose", &path("malformed.json")]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("malformed"), "{err}");
    let (code, _, _) = run(&["decompose", &path("missing.json")]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn large_space_hits_the_guard() {
    let (code, _, err) = run(&["decompose", &path("n30.json")]);
    assert_eq!(code, 3);
    assert!(err.contains("limit"), "{err}");
    let o = Command::new(env!("CARGO_BIN_EXE_dejong"))
        .args(["decompose", &path("sum4.json")])
        .env("DEJONG_MAX_OUTCOMES", "8")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_product_is_tight() {
    let (code, out, _) = run(&["verify", &path("x1x2.json"), "--kappa", "4"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["lemma_slacks"]["lemma3b"], "0");
    assert_eq!(v["kappa_source"], "user");
    assert_eq!(v["fourth_increment"], "2");
    assert_eq!(v["shzh"]["term1"], "0");
    assert_eq!(v["shzh"]["term2"], "2");
    assert!(v["chain"].as_array().unwrap().iter().all(|c| c["holds"] == true));
    assert!(v["theta_identity"].as_array().unwrap().iter().all(|t| t["lhs"] == "4" && t["rhs"] == "4"));
}

#[test]
fn verify_uses_symmetric_kappa() {
    let (code, out, _) = run(&["verify", &path("sum4.json")]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["kappa_source"], "paper-symmetric");
}

#[test]
fn verify_nondegenerate_fails_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let (code, stdout, _) = run(&["verify", &path("nondegenerate.json"), "--kappa", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.is_empty());
    let v = json(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(v["degenerate"], false);
    assert_ne!(v["regression_max_residual"], "0");
}

#[test]
fn verify_without_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let (code, _, err) = run(&["verify", &path("chain3.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 4);
    assert!(err.contains("kappa"));
    let v = json(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(v["kappa_source"], "unverified constant");
    assert_eq!(v["lemma_slacks"]["lemma1"], Value::Null);
    let (code, _, _) = run(&["verify", &path("chain3.json"), "--kappa", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn bound_fixtures() {
    let (code, out, _) = run(&["bound", &path("x1x2.json")]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!((num(&v["kolmogorov_bound"]) - 41.9291413922398).abs() < 1e-10);
    assert!((num(&v["exact_dk"]) - 0.341344746068543).abs() < 1e-12);
    assert_eq!(v["verdicts"]["overall"], "dominates");

    let (code, out, _) = run(&["bound", &path("sum4.json")]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["exact_dk"], "0.1875");
    assert_eq!(v["fourth_moment_exact"], "5/2");
    assert!((num(&v["kolmogorov_bound"]) - 17.80).abs() < 5e-3);
    assert!((num(&v["symmetric_bound"]) - 17.9852813742386).abs() < 1e-10);

    let (code, _, _) = run(&["bound", &path("chain3.json")]);
    assert_eq!(code, 4);
}

#[test]
fn bound_inputs_only() {
    let (code, out, _) = run(&["bound", "--inputs-only", "--e4", "3", "--rho", "0", "--p", "2", "--n", "10", "--kappa", "4"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["kolmogorov_bound"], "0");
    assert_eq!(v["wasserstein_bound"], "0");
    assert_eq!(v["verdicts"]["overall"], "no-distance");
    let (code, out, _) = run(&["bound", "--inputs-only", "--e4", "3", "--rho", "0", "--p", "1", "--n", "4", "--symmetric", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("spec_id,"));
    let (code, _, _) = run(&["bound", "--inputs-only", "--e4", "3"]);
    assert_eq!(code, 2);
}

#[test]
fn bound_with_monte_carlo() {
    let args = ["bound", &path("n30.json"), "--kappa", "2", "--mc", "20000", "--seed", "5"];
    let (code, out, _) = run(&args);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["method"], "mc");
    assert_eq!(v["exact_dk"], Value::Null);
    assert!(num(&v["empirical_dk"]["estimate"]) < 0.2);
    let (_, again, _) = run(&args);
    assert_eq!(out, again);
    let (code, _, _) = run(&["bound", &path("n30.json"), "--kappa", "2"]);
    assert_eq!(code, 3);
}

#[test]
fn distance_and_simulate_are_reproducible() {
    let args = ["distance", &path("sum4.json"), "--mc", "8192", "--seed", "9"];
    let (code, a, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(a, run(&args).1);
    assert_eq!(json(&a)["exact_dw"], "0.25707626984755");

    let sim = |workers: &str| run(&["simulate", &path("gaussian_chaos.json"), "--mc", "10000", "--seed", "2", "--workers", workers, "--format", "csv"]);
    let (code, one, _) = sim("1");
    assert_eq!(code, 0);
    assert_eq!(one, sim("3").1);
    assert_eq!(one.lines().count(), 2);
    let (code, _, _) = run(&["simulate", &path("sum4.json")]);
    assert_eq!(code, 2);
}

#[test]
fn verify_reports_are_byte_identical() {
    let args = ["verify", &path("sum4.json")];
    assert_eq!(dejong(&args).stdout, dejong(&args).stdout);
}

#[test]
fn sweep_linear_family() {
    let (code, out, _) = run(&["sweep", &path("family_linear.json")]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let dk = header.iter().position(|h| *h == "dK").unwrap();
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(dk).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 4);
    assert!(values.windows(2).all(|w| w[1] < w[0]));
    // d_K * sqrt(n) stays of order one.
    for (v, n) in values.iter().zip([4.0f64, 8.0, 16.0, 32.0]) {
        let c = v * n.sqrt();
        assert!((0.3..0.45).contains(&c), "{c}");
    }
}

#[test]
fn sweep_counterexample_keeps_distance() {
    let (code, out, _) = run(&["sweep", &path("family_counterexample.json"), "--format", "json"]);
    assert_eq!(code, 0);
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert!(num(&r["dK"]) >= 0.05);
        assert!((num(&r["rho"]) - 0.741963784302726).abs() < 1e-12);
        assert_eq!(r["status"], "no-kappa");
    }
}

#[test]
fn sweep_empty_and_failing_members() {
    let (code, out, _) = run(&["sweep", &path("family_empty.json")]);
    assert_eq!(code, 0);
    assert_eq!(out, "member,n,p,E4,rho,kappa,bK,bW,bSym,dK,dW,dK_mc,method,status\n");

    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    std::fs::copy(spec("x1x2.json"), dir.path().join("x1x2.json")).unwrap();
    std::fs::write(&fam, r#"{"kind": "files", "specs": ["gone.json", "x1x2.json"]}"#).unwrap();
    let (code, out, _) = run(&["sweep", fam.to_str().unwrap()]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("gone.json,") && lines[1].contains("error"));
    assert!(lines[2].ends_with(",exact,ok"));
}
