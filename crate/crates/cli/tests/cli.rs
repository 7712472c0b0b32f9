use std::path::Path;
use std::process::{Command, Output};

fn regmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regmin")).args(args).output().expect("spawn regmin")
}

fn ok(args: &[&str]) -> String {
    let out = regmin(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn synth_pool(dir: &Path) -> String {
    let x = p(dir, "X.csv");
    ok(&["synth", "gaussian", "--spec", "80x4", "--seed", "3", "--out", &x]);
    x
}

#[test]
fn relax_writes_one_weight_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let x = synth_pool(dir.path());
    let w = p(dir.path(), "w.csv");
    let stdout = ok(&["relax", "--in", &x, "--criterion", "a", "--budget", "10", "--out", &w]);
    let summary: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert!(summary["f_diamond"].as_f64().unwrap() > 0.0);
    let text = std::fs::read_to_string(&w).unwrap();
    let weights: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(weights.len(), 80);
    assert!((weights.iter().sum::<f64>() - 10.0).abs() < 1e-8);
    // 17 significant digits survive the round trip.
    assert!(text.lines().all(|l| l.split('e').next().unwrap().trim_start_matches('-').len() == 18));
}

#[test]
fn select_regret_min_reports_certified_record() {
    let dir = tempfile::tempdir().unwrap();
    let x = synth_pool(dir.path());
    let (json, idx, prof) = (p(dir.path(), "r.json"), p(dir.path(), "i.csv"), p(dir.path(), "prof.csv"));
    ok(&[
        "select", "--in", &x, "--criterion", "A", "--budget", "12", "--method", "regret-min", "--regularizer", "l12", "--alpha-grid", "0.5,2,8",
        "--out", &json, "--indices-out", &idx, "--profile-out", &prof,
    ]);
    let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let f = rec["objective"].as_f64().unwrap();
    let fd = rec["f_diamond"].as_f64().unwrap();
    let tau = rec["tau"].as_f64().unwrap();
    assert!(fd <= f + 1e-9);
    assert!(f <= fd / tau * (1.0 + 1e-9));
    assert_eq!(rec["indices"].as_array().unwrap().len(), 12);
    assert_eq!(rec["regret_trace"].as_array().unwrap().len(), 12);
    assert_eq!(std::fs::read_to_string(&idx).unwrap().lines().count(), 13);
    assert!(std::fs::read_to_string(&prof).unwrap().starts_with("alpha,rel_objective,accuracy\n"));
}

#[test]
fn select_reuses_weights_and_runs_baseline_trials() {
    let dir = tempfile::tempdir().unwrap();
    let x = synth_pool(dir.path());
    let w = p(dir.path(), "w.csv");
    ok(&["relax", "--in", &x, "--criterion", "D", "--budget", "10", "--out", &w]);
    let (json, idx) = (p(dir.path(), "u.json"), p(dir.path(), "u.csv"));
    ok(&[
        "select", "--in", &x, "--criterion", "D", "--budget", "10", "--weights", &w, "--method", "uniform", "--trials", "3", "--seed", "9", "--out", &json,
        "--indices-out", &idx,
    ]);
    let recs: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(recs.len(), 3);
    for t in 0..3 {
        assert!(dir.path().join(format!("u_t{t}.csv")).exists());
    }
    assert_ne!(recs[0]["indices"], recs[1]["indices"]);
    ok(&["select", "--in", &x, "--criterion", "D", "--budget", "10", "--weights", &w, "--method", "rrqr", "--out", &json]);
    let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rec["method"], "rrqr");
}

#[test]
fn ridge_method_requires_a_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let x = synth_pool(dir.path());
    let json = p(dir.path(), "r.json");
    let base = ["select", "--in", &x, "--criterion", "A", "--budget", "3", "--method", "ridge-regret-min", "--alpha", "1", "--out", &json];
    assert_eq!(regmin(&base).status.code(), Some(2));
    let mut with = base.to_vec();
    with.extend(["--ridge-preset", "scaled", "--regularizer", "l12"]);
    ok(&with);
    let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!((rec["ridge_lambda"].as_f64().unwrap() - 3e-5).abs() < 1e-18);
    assert_eq!(rec["indices"].as_array().unwrap().len(), 3);
}

#[test]
fn prescription_must_match_regularizer() {
    let dir = tempfile::tempdir().unwrap();
    let x = synth_pool(dir.path());
    let json = p(dir.path(), "r.json");
    let out = regmin(&["select", "--in", &x, "--criterion", "A", "--budget", "20", "--method", "regret-min", "--regularizer", "l12", "--prescribe", "eps=0.5,mode=a", "--out", &json]);
    assert_eq!(out.status.code(), Some(2));
    ok(&["select", "--in", &x, "--criterion", "A", "--budget", "20", "--method", "regret-min", "--prescribe", "eps=0.5,mode=a", "--out", &json]);
    let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let alpha = rec["alpha"].as_f64().unwrap();
    assert!((alpha - 8.0 * 4f64.ln()).abs() < 1e-12, "{alpha}");
}

#[test]
fn evaluate_reports_accuracy_and_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let x = synth_pool(dir.path());
    let labels = p(dir.path(), "y.csv");
    let sel = p(dir.path(), "s.csv");
    std::fs::write(&labels, (0..80).map(|i| format!("{}\n", i % 3)).collect::<String>()).unwrap();
    std::fs::write(&sel, "0\n1\n3\n4\n").unwrap();
    let stdout = ok(&["evaluate", "--in", &x, "--selection", &sel, "--labels", &labels, "--l2", "0.1"]);
    let r: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(r["classes_covered"], 2);
    assert_eq!(r["num_classes"], 3);
    let acc = r["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    std::fs::write(&labels, "0\n1\n").unwrap();
    assert_eq!(regmin(&["evaluate", "--in", &x, "--selection", &sel, "--labels", &labels]).status.code(), Some(3));
}

#[test]
fn riskstudy_writes_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "study.csv");
    let stdout = ok(&["riskstudy", "--dim", "3", "--pool-size", "200", "--budget", "30", "--subsets", "6", "--redraws", "2", "--out", &out]);
    let r: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(r["points"], 6);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 7);
}

#[test]
fn synth_blocks_and_embed() {
    let dir = tempfile::tempdir().unwrap();
    let x = p(dir.path(), "B.csv");
    let stdout = ok(&["synth", "blocks", "--spec", "30x3@2,20x2@1", "--out", &x]);
    let r: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!((r["n"].as_u64(), r["d"].as_u64()), (Some(50), Some(5)));
    let e = p(dir.path(), "E.csv");
    let stdout = ok(&["embed", "--neighbors", "8", "--dim", "3", "--in", &x, "--out", &e]);
    let r: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!((r["n"].as_u64(), r["d"].as_u64()), (Some(50), Some(3)));
    assert_eq!(regmin(&["synth", "blocks", "--spec", "30x3", "--out", &x]).status.code(), Some(2));
}

#[test]
fn run_sweep_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        r#"
seed = 1
output_dir = "out"
criteria = ["A", "V"]
budgets = [8]
dataset = { kind = "gaussian", n = 40, d = 3 }

[[methods]]
name = "regret-min"
regularizer = "entropy"
alpha = 1.0

[[methods]]
name = "max-weights"
"#,
    )
    .unwrap();
    let outdir = p(dir.path(), "res");
    let stdout = ok(&["run", "--config", &cfg.display().to_string(), "--output-dir", &outdir]);
    let r: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(r["records"], 4);
    assert_eq!(r["failed_cells"], 0);
    assert!(Path::new(&outdir).join("results.csv").exists());

    std::fs::write(&cfg, "seed = 1\nbudgets = []\n").unwrap();
    assert_eq!(regmin(&["run", "--config", &cfg.display().to_string()]).status.code(), Some(2));
    assert_eq!(regmin(&["run", "--config", &p(dir.path(), "missing.toml")]).status.code(), Some(3));
}

#[test]
fn verify_subcommands_pass() {
    let dir = tempfile::tempdir().unwrap();
    let x = synth_pool(dir.path());
    for c in ["A", "E", "V", "G"] {
        let stdout = ok(&["verify", "assumption-f", "--criterion", c, "--in", &x, "--samples", "40"]);
        assert!(stdout.contains("\"passed\":true"), "{c}: {stdout}");
    }
    // log-det shifts under scaling instead of scaling, so only sub-linearity fails.
    let out = regmin(&["verify", "assumption-f", "--criterion", "D", "--samples", "40"]);
    assert_eq!(out.status.code(), Some(4));
    let r: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    assert_eq!((r["convexity_failures"].as_u64(), r["monotonicity_failures"].as_u64()), (Some(0), Some(0)));
    assert!(r["sublinearity_failures"].as_u64().unwrap() > 0);
    let stdout = ok(&["verify", "bounds", "--in", &x, "--criterion", "A", "--budget", "20", "--alpha", "3"]);
    assert!(stdout.contains("\"passed\":true"), "{stdout}");
    let stdout = ok(&["verify", "bounds", "--in", &x, "--criterion", "A", "--budget", "3", "--alpha", "2", "--regularizer", "l12", "--ridge", "0.01"]);
    assert!(stdout.contains("ridge_per_step"), "{stdout}");
    assert_eq!(regmin(&["verify", "assumption-f", "--criterion", "V"]).status.code(), Some(2));
}

#[test]
fn bad_input_maps_to_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let x = p(dir.path(), "bad.csv");
    std::fs::write(&x, "1,2\n3\n").unwrap();
    let out = regmin(&["relax", "--in", &x, "--criterion", "A", "--budget", "2", "--out", &p(dir.path(), "w.csv")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(regmin(&["relax", "--in", &x, "--criterion", "Q", "--budget", "2", "--out", "w"]).status.code(), Some(2));
}
