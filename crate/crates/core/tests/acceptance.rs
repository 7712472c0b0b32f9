//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the report always prints.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use regmin::baselines::{select_greedy_a_removal, select_mmd_critic, KernelMatrix, MmdOptions};
use regmin::data::{gaussian_pool, BlockSpec};
use regmin::evalrisk::{risk_correlation_study, LogisticModel, StudyConfig};
use regmin::experiment::{load_dataset, run_experiment, write_csv, DatasetSpec, ExperimentConfig, MethodSpec, RelaxSettings, SummaryRow, DEFAULT_ALPHA_GRID};
use regmin::ftrl::{ftrl_action, round_and_certify, verify_lambda_min_bound, whiten, ftrl_select, Regularizer, RoundingSpec, RoundingTrace, SelectionResult};
use regmin::relax::{solve_relaxed, MirrorDescentConfig, RelaxedSolution};
use regmin::ridge::{run_ridge_regret_min, verify_ridge_per_step_bounds};
use regmin::{Criterion, CriterionKind, DesignPool, RngSeed, SpdMatrix};

const BOUND_SLACK: f64 = 1e-8;

struct Check {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    /// Reported but not asserted.
    notes: Vec<String>,
}

#[derive(Serialize)]
struct RunRow {
    run: String,
    regularizer: String,
    criterion: String,
    budget: usize,
    alpha: f64,
    ridge: f64,
    objective: f64,
    f_diamond: f64,
    tau: f64,
    c1: f64,
    indices: String,
}

fn row(run: &str, c: CriterionKind, r: &SelectionResult) -> RunRow {
    RunRow {
        run: run.to_string(),
        regularizer: r.regularizer.to_string(),
        criterion: c.to_string(),
        budget: r.indices.len(),
        alpha: r.alpha_used,
        ridge: r.ridge_lambda,
        objective: r.objective_selected,
        f_diamond: r.f_diamond,
        tau: r.tau,
        c1: r.c1_diagnostic,
        indices: r.indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";"),
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rows.csv");
    write_csv(&p, rows).unwrap();
    std::fs::read(p).unwrap()
}

// Independent oracles on raw matrices.

fn gram(pool: &DesignPool, idx: &[usize]) -> DMatrix<f64> {
    let xs = pool.rows_of(idx);
    xs.tr_mul(&xs)
}

fn weighted_gram(pool: &DesignPool, w: &[f64], ridge: f64) -> DMatrix<f64> {
    let x = pool.features();
    let mut m = DMatrix::<f64>::identity(pool.d(), pool.d()) * ridge;
    for (i, &wi) in w.iter().enumerate() {
        let r = x.row(i).transpose();
        m += wi * &r * r.transpose();
    }
    m
}

fn a_value(m: &DMatrix<f64>) -> f64 {
    match m.clone().try_inverse() {
        Some(inv) if m.clone().cholesky().is_some() => inv.trace() / m.nrows() as f64,
        _ => f64::INFINITY,
    }
}

fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().min()
}

/// `lambda_min(L^{-1} (G_S + ridge I) L^{-T})` with `Sigma = L L^T`.
fn tau_oracle(pool: &DesignPool, relaxed: &RelaxedSolution, idx: &[usize], ridge: f64) -> f64 {
    let sigma = weighted_gram(pool, &relaxed.pi, ridge);
    let l = sigma.cholesky().expect("relaxed covariance is PD").l();
    let linv = l.try_inverse().unwrap();
    let g = gram(pool, idx) + DMatrix::<f64>::identity(pool.d(), pool.d()) * ridge;
    sym_min_eig(&(&linv * g * linv.transpose()))
}

fn relax(pool: &DesignPool, c: &Criterion, k: usize, ridge: f64) -> RelaxedSolution {
    solve_relaxed(pool, c, &MirrorDescentConfig::new(k).with_ridge(ridge)).expect("relaxation")
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

struct Runs {
    traces: Vec<(String, RoundingTrace)>,
    rows: BTreeMap<&'static str, Vec<u8>>,
    c1: Vec<(String, f64)>,
}

fn check_brute_force(runs: &mut Runs) -> Check {
    let start = Instant::now();
    let pool = gaussian_pool(12, 3, RngSeed(101)).unwrap();
    let c = Criterion::new(CriterionKind::A, &pool);
    let subsets = combinations(12, 4);
    let f_star = subsets.iter().map(|s| a_value(&gram(&pool, s))).fold(f64::INFINITY, f64::min);
    let relaxed = relax(&pool, &c, 4, 0.0);
    let f_diamond = a_value(&weighted_gram(&pool, &relaxed.pi, 0.0));
    let mut ok = subsets.len() == 495 && f_diamond <= f_star + 1e-8;
    let mut worst = f64::NEG_INFINITY;
    let mut rows = Vec::new();
    for reg in [Regularizer::Entropy, Regularizer::LHalf] {
        let mut best: Option<SelectionResult> = None;
        for &alpha in &DEFAULT_ALPHA_GRID {
            let (r, trace) = round_and_certify(&pool, &relaxed, &c, &RoundingSpec::new(reg, alpha, 4)).unwrap();
            let f_sel = a_value(&gram(&pool, &r.indices));
            let tau = tau_oracle(&pool, &relaxed, &r.indices, 0.0);
            let gap = f_sel - f_diamond / tau;
            worst = worst.max(gap);
            ok &= tau > 0.0 && gap <= 1e-8 && (r.tau - tau).abs() <= 1e-9 * tau.max(1.0);
            runs.traces.push((format!("brute-force {reg} alpha={alpha}"), trace));
            if best.as_ref().is_none_or(|b| r.objective_selected < b.objective_selected) {
                best = Some(r);
            }
        }
        let best = best.unwrap();
        ok &= best.objective_selected >= f_star - 1e-12;
        rows.push(row("brute-force", CriterionKind::A, &best));
    }
    runs.rows.insert("brute-force", csv_bytes(&rows));
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 5.0;
    Check {
        id: 1,
        name: "brute-force near-optimality (n=12, d=3, k=4, A)",
        passed: ok,
        detail: format!("f*={f_star:.6} f_diamond={f_diamond:.6} max(f_sel - f_diamond/tau)={worst:.2e} time={secs:.2}s"),
        notes: Vec::new(),
    }
}

fn desk_runs(ridge: f64, tag: &str, runs: &mut Runs) -> (bool, String, Vec<String>) {
    let d = 10;
    let eps: f64 = 0.5;
    let pool = gaussian_pool(3000, d, RngSeed(202)).unwrap();
    let c = Criterion::new(CriterionKind::A, &pool);
    let mut ok = true;
    let mut detail = Vec::new();
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let cases = [
        (Regularizer::Entropy, 4.0 * (d as f64).ln() / eps, 1474usize),
        (Regularizer::LHalf, 8.0 * (d as f64).sqrt() / eps, 1280usize),
    ];
    for (reg, alpha, k) in cases {
        let start = Instant::now();
        let relaxed = relax(&pool, &c, k, ridge);
        // The guarantee is stated for selection with replacement.
        let spec = RoundingSpec::new(reg, alpha, k).with_ridge(ridge).with_replacement(true);
        let (r, trace) = round_and_certify(&pool, &relaxed, &c, &spec).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let f_sel = a_value(&(gram(&pool, &r.indices) + DMatrix::<f64>::identity(d, d) * ridge));
        let f_diamond = a_value(&weighted_gram(&pool, &relaxed.pi, ridge));
        let ratio = f_sel / f_diamond;
        ok &= ratio <= 1.0 + eps && secs < 60.0 && r.indices.len() == k;
        detail.push(format!("{reg}: k={k} alpha={alpha:.3} f/f_diamond={ratio:.4} C1={:.3} {secs:.1}s", r.c1_diagnostic));
        runs.c1.push((format!("{tag} {reg}"), r.c1_diagnostic));
        runs.traces.push((format!("{tag} {reg}"), trace));
        rows.push(row(tag, CriterionKind::A, &r));
        let distinct = round_and_certify(&pool, &relaxed, &c, &spec.with_replacement(false)).unwrap().0;
        notes.push(format!("{reg} without replacement: f/f_diamond={:.4}", distinct.objective_selected / f_diamond));
    }
    runs.rows.insert(if ridge > 0.0 { "ridge-guarantee" } else { "guarantee" }, csv_bytes(&rows));
    (ok, detail.join("; "), notes)
}

fn check_guarantee(runs: &mut Runs) -> Check {
    let (passed, detail, notes) = desk_runs(0.0, "guarantee", runs);
    Check {
        id: 2,
        name: "sample-complexity guarantee, f <= 1.5 f_diamond (d=10, n=3000)",
        passed,
        detail,
        notes,
    }
}

fn check_ridge_guarantee(runs: &mut Runs) -> Check {
    let (passed, detail, notes) = desk_runs(0.01, "ridge-guarantee", runs);
    Check {
        id: 3,
        name: "ridge guarantee, f(X_S^T X_S + 0.01 I) <= 1.5 f_diamond",
        passed,
        detail,
        notes,
    }
}

fn fig7_config(dir: &Path, with_replacement: bool) -> ExperimentConfig {
    ExperimentConfig {
        seed: RngSeed(707),
        output_dir: dir.to_path_buf(),
        dataset: DatasetSpec::Synthetic {
            blocks: vec![BlockSpec { rows: 200, cols: 10, decay: 2.0 }, BlockSpec { rows: 200, cols: 10, decay: 1.0 }],
            scale: 1.0,
        },
        preprocess: None,
        criteria: vec![CriterionKind::A, CriterionKind::D, CriterionKind::E, CriterionKind::V],
        budgets: vec![24, 40, 60],
        trials: 10,
        ridge: 0.0,
        relax: RelaxSettings::default(),
        methods: vec![
            MethodSpec::RegretMin { regularizer: Regularizer::Entropy, alpha: None, alpha_grid: None, prescribe: None, with_replacement },
            MethodSpec::RegretMin { regularizer: Regularizer::LHalf, alpha: None, alpha_grid: None, prescribe: None, with_replacement },
            MethodSpec::Uniform,
        ],
        evaluation: None,
        plots: true,
    }
}

fn check_fig7(runs: &mut Runs, with_distinct_note: bool) -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig7_config(dir.path(), true);
    let out = run_experiment(&cfg).unwrap();
    let mean = |crit: &str, method: &str, k: usize| mean_of(&out.summary, crit, method, k);
    let mut ok = out.failed_cells == 0;
    let mut fails = Vec::new();
    for r in &out.records {
        if let Some(rel) = r.relative_objective {
            if !(rel >= 1.0 - 1e-9) {
                ok = false;
                fails.push(format!("{} {} k={} relative objective {rel}", r.criterion, r.method, r.budget));
            }
        }
        if let Some(c1) = r.c1 {
            runs.c1.push((format!("fig7 {} {} k={}", r.criterion, r.method, r.budget), c1));
        }
    }
    let violations = ordering_violations(&out.summary);
    ok &= violations.is_empty();
    fails.extend(violations);
    // Re-round each regret-min cell with its chosen rate to expose the traces.
    let (pool, _) = load_dataset(&cfg).unwrap();
    for r in out.records.iter().filter(|r| r.method.starts_with("regret-min")) {
        let kind: CriterionKind = r.criterion.parse().unwrap();
        let c = Criterion::new(kind, &pool);
        let relaxed = relax(&pool, &c, r.budget, 0.0);
        let reg: Regularizer = r.method.trim_start_matches("regret-min-").parse().unwrap();
        let spec = RoundingSpec::new(reg, r.alpha.unwrap(), r.budget).with_replacement(true);
        let (_, trace) = round_and_certify(&pool, &relaxed, &c, &spec).unwrap();
        runs.traces.push((format!("fig7 {} {} k={}", r.criterion, r.method, r.budget), trace));
    }
    runs.rows.insert("fig7", std::fs::read(dir.path().join("results.csv")).unwrap());
    let summary: Vec<String> = ["A", "D", "E", "V"]
        .iter()
        .map(|c| format!("{c}: ent {:.3}/l12 {:.3}/uni {:.3} @k=24", mean(c, "regret-min-entropy", 24), mean(c, "regret-min-l12", 24), mean(c, "uniform", 24)))
        .collect();
    let uni_singular = uniform_singular(&out.summary);

    let mut notes = vec![format!("{uni_singular} of 120 uniform trials were singular and are left out of its means")];
    if with_distinct_note {
        let dir2 = tempfile::tempdir().unwrap();
        let distinct = run_experiment(&fig7_config(dir2.path(), false)).unwrap();
        let v = ordering_violations(&distinct.summary);
        notes.push(if v.is_empty() {
            "without replacement: ordering also holds".to_string()
        } else {
            format!("without replacement, against the same relaxation: {}", v.join("; "))
        });
    }
    Check {
        id: 7,
        name: "block-decay sweep ordering (n=400, d=20, k in {24,40,60})",
        passed: ok,
        detail: if fails.is_empty() {
            format!("{}; time={:.1}s", summary.join(", "), start.elapsed().as_secs_f64())
        } else {
            fails.join("; ")
        },
        notes,
    }
}

fn mean_of(summary: &[SummaryRow], crit: &str, method: &str, k: usize) -> f64 {
    summary
            .iter()
            .find(|r| r.criterion == crit && r.method == method && r.budget == k)
            .and_then(|r| r.mean_relative_objective)
            .unwrap_or(f64::NAN)
}

/// Regret-min must beat the uniform mean everywhere and shrink its gap as k
/// grows. Uniform's mean is over its nonsingular trials only, which can only
/// make it smaller; regret-min must have no singular runs at all.
fn ordering_violations(summary: &[SummaryRow]) -> Vec<String> {
    let mut fails = Vec::new();
    for crit in ["A", "D", "E", "V"] {
        for method in ["regret-min-entropy", "regret-min-l12"] {
            let mut prev = f64::INFINITY;
            for k in [24, 40, 60] {
                let (rm, un) = (mean_of(summary, crit, method, k), mean_of(summary, crit, "uniform", k));
                let singular = summary.iter().find(|r| r.criterion == crit && r.method == method && r.budget == k).map_or(1, |r| r.singular + r.failures);
                if singular > 0 {
                    fails.push(format!("{crit} {method} k={k}: {singular} singular or failed runs"));
                }
                if !(rm < un) {
                    fails.push(format!("{crit} {method} k={k}: {rm:.4} vs uniform {un:.4}"));
                }
                if !(rm <= prev) {
                    fails.push(format!("{crit} {method}: {rm:.4} at k={k} exceeds {prev:.4}"));
                }
                prev = rm;
            }
        }
    }
    fails
}

fn uniform_singular(summary: &[SummaryRow]) -> usize {
    summary.iter().filter(|r| r.method == "uniform").map(|r| r.singular).sum()
}

fn check_bounds(runs: &Runs) -> Check {
    let mut ok = !runs.traces.is_empty();
    let mut worst_lm = f64::INFINITY;
    let mut worst_ps = f64::INFINITY;
    let mut ridge_runs = 0;
    let mut fails = Vec::new();
    for (name, trace) in &runs.traces {
        let lm = verify_lambda_min_bound(trace);
        worst_lm = worst_lm.min(lm.min_margin);
        if !(lm.min_margin >= -BOUND_SLACK) {
            ok = false;
            fails.push(format!("{name}: lambda_min margin {:.3e}", lm.min_margin));
        }
        if trace.spec.ridge_lambda > 0.0 {
            let ps = verify_ridge_per_step_bounds(trace);
            ridge_runs += 1;
            if ps.enforced {
                worst_ps = worst_ps.min(ps.min_margin);
                if !(ps.min_margin >= -BOUND_SLACK) {
                    ok = false;
                    fails.push(format!("{name}: per-step margin {:.3e}", ps.min_margin));
                }
            }
        }
    }
    ok &= ridge_runs > 0;
    Check {
        id: 4,
        name: "lambda_min prefix bounds and ridge per-step bounds",
        passed: ok,
        detail: if fails.is_empty() {
            format!("{} runs, min lambda_min margin {worst_lm:.3e}, {ridge_runs} ridge runs, min per-step margin {worst_ps:.3e}", runs.traces.len())
        } else {
            fails.join("; ")
        },
        notes: Vec::new(),
    }
}

fn check_ftrl_invariants() -> Check {
    let mut rng = RngSeed(505).rng();
    let (mut steps, mut worst_tr, mut worst_eig, mut worst_nu) = (0usize, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let d = rng.random_range(2..=12);
        let alpha: f64 = 10f64.powf(rng.random_range(-1.0..2.0));
        let mut loss = SpdMatrix::zeros(d);
        for _ in 0..100 {
            let x = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            loss.add_outer(&x, alpha * rng.random_range(0.0..2.0));
            for reg in [Regularizer::Entropy, Regularizer::LHalf] {
                let a = ftrl_action(&loss, reg).unwrap();
                steps += 1;
                worst_tr = worst_tr.max((a.matrix.trace() - 1.0).abs());
                worst_eig = worst_eig.min(sym_min_eig(a.matrix.as_matrix()));
                if reg == Regularizer::LHalf {
                    worst_nu = worst_nu.max(a.residual.abs());
                }
            }
        }
    }
    Check {
        id: 5,
        name: "FTRL action invariants over 10^4 randomized steps",
        passed: steps == 10_000 && worst_tr <= 1e-8 && worst_eig >= -1e-12 && worst_nu <= 1e-12,
        detail: format!("{steps} actions, max |Tr A - 1|={worst_tr:.2e}, min eig={worst_eig:.2e}, max nu residual={worst_nu:.2e}"),
        notes: Vec::new(),
    }
}

fn check_gradients() -> Check {
    let mut rng = RngSeed(606).rng();
    let pool = gaussian_pool(10, 3, RngSeed(66)).unwrap();
    let n = pool.n();
    let h = 1e-6;
    let mut worst_fd: f64 = 0.0;
    let mut worst_sub: f64 = f64::INFINITY;
    for kind in [CriterionKind::A, CriterionKind::D, CriterionKind::V] {
        let c = Criterion::new(kind, &pool);
        for _ in 0..100 {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
            let (_, g) = c.value_and_gradient(&pool, &w, 0.0).unwrap();
            let fd: Vec<f64> = (0..n)
                .map(|i| {
                    let (mut up, mut dn) = (w.clone(), w.clone());
                    up[i] += h;
                    dn[i] -= h;
                    let f = |v: &[f64]| c.value_and_gradient(&pool, v, 0.0).unwrap().0;
                    (f(&up) - f(&dn)) / (2.0 * h)
                })
                .collect();
            let err = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            worst_fd = worst_fd.max(err / norm);
        }
    }
    for kind in [CriterionKind::E, CriterionKind::G] {
        let c = Criterion::new(kind, &pool);
        for _ in 0..100 {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
            let (f0, g) = c.value_and_gradient(&pool, &w, 0.0).unwrap();
            for _ in 0..10 {
                let w2: Vec<f64> = w.iter().map(|wi| (wi + rng.random_range(-0.15..0.15f64)).max(0.05)).collect();
                let f1 = c.value_and_gradient(&pool, &w2, 0.0).unwrap().0;
                let lin = f0 + g.iter().zip(w2.iter().zip(&w)).map(|(gi, (a, b))| gi * (a - b)).sum::<f64>();
                worst_sub = worst_sub.min(f1 - lin);
            }
        }
    }
    Check {
        id: 6,
        name: "weight gradients (A/D/V finite differences, E/G subgradients)",
        passed: worst_fd <= 1e-5 && worst_sub >= -1e-8,
        detail: format!("max FD rel err={worst_fd:.2e}, min f(w') - linearization={worst_sub:.2e}"),
        notes: Vec::new(),
    }
}

fn check_risk_correlation(runs: &mut Runs) -> Check {
    let start = Instant::now();
    let pool = gaussian_pool(4000, 8, RngSeed(808)).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    let mut bytes = Vec::new();
    for classes in [2usize, 4] {
        let star = LogisticModel::random(classes, 8, RngSeed(810 + classes as u64)).unwrap();
        let rep = risk_correlation_study(&pool, &star, &StudyConfig::new(vec![400], 50, RngSeed(820 + classes as u64))).unwrap();
        let rho = rep.spearman.unwrap_or(f64::NAN);
        ok &= rho >= 0.8 && rep.records.len() + rep.skipped_singular == 50;
        detail.push(format!("c={classes}: spearman={rho:.3} pearson={:.3}", rep.pearson.unwrap_or(f64::NAN)));
        bytes.extend(csv_bytes(&rep.records));
    }
    runs.rows.insert("risk-correlation", bytes);
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    detail.push(format!("time={secs:.1}s"));
    Check {
        id: 8,
        name: "V-objective vs excess risk rank correlation (d=8, k=400)",
        passed: ok,
        detail: detail.join(", "),
        notes: Vec::new(),
    }
}

fn check_baseline_oracles() -> Check {
    // Greedy removal: replay from the initial set and recompute every candidate directly.
    let pool = gaussian_pool(60, 4, RngSeed(909)).unwrap();
    let (sel, steps) = select_greedy_a_removal(&pool, 10, 10, RngSeed(9)).unwrap();
    let mut current: Vec<usize> = sel.indices().iter().copied().chain(steps.iter().map(|s| s.removed)).collect();
    current.sort_unstable();
    let mut greedy_err: f64 = 0.0;
    let mut greedy_ok = steps.len() == 30;
    for s in &steps {
        let costs: Vec<(usize, f64)> = current
            .iter()
            .map(|&i| {
                let rest: Vec<usize> = current.iter().copied().filter(|&j| j != i).collect();
                (i, gram(&pool, &rest).try_inverse().map_or(f64::INFINITY, |m| m.trace()))
            })
            .collect();
        let direct = costs.iter().find(|(i, _)| *i == s.removed).unwrap().1;
        let min = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        greedy_err = greedy_err.max((s.predicted_trace - direct).abs() / direct);
        greedy_ok &= direct <= min * (1.0 + 1e-9);
        current.retain(|&j| j != s.removed);
    }
    greedy_ok &= greedy_err <= 1e-9;

    // MMD increments against J recomputed from the kernel definition.
    let mpool = gaussian_pool(50, 3, RngSeed(919)).unwrap();
    let (msel, incs) = select_mmd_critic(&mpool, 10, &MmdOptions::default()).unwrap();
    let gamma = KernelMatrix::rbf(&mpool, None).unwrap().gamma;
    let x = mpool.features();
    let kern = |i: usize, j: usize| (-(x.row(i) - x.row(j)).norm_squared() / (2.0 * gamma * gamma)).exp();
    let j_direct = |s: &[usize]| {
        let (nf, sf) = (mpool.n() as f64, s.len() as f64);
        let cross: f64 = s.iter().map(|&j| (0..mpool.n()).map(|i| kern(i, j)).sum::<f64>()).sum();
        let inner: f64 = s.iter().map(|&i| s.iter().map(|&j| kern(i, j)).sum::<f64>()).sum();
        2.0 * cross / (nf * sf) - inner / (sf * sf)
    };
    let chosen = msel.indices();
    let mut mmd_err: f64 = 0.0;
    for t in 0..chosen.len() {
        let prev = if t == 0 { 0.0 } else { j_direct(&chosen[..t]) };
        mmd_err = mmd_err.max((incs[t] - (j_direct(&chosen[..=t]) - prev)).abs());
    }

    // lambda = 0 ridge rounding against the plain rounder.
    let rpool = gaussian_pool(200, 6, RngSeed(929)).unwrap();
    let c = Criterion::new(CriterionKind::A, &rpool);
    let relaxed = relax(&rpool, &c, 30, 0.0);
    let mut ridge_same = true;
    for reg in [Regularizer::Entropy, Regularizer::LHalf] {
        let plain = round_and_certify(&rpool, &relaxed, &c, &RoundingSpec::new(reg, 2.0, 30)).unwrap().0;
        let ridge0 = run_ridge_regret_min(&rpool, &relaxed, &c, reg, 2.0, 30, 0.0, false).unwrap();
        let white = whiten(&rpool, &relaxed, 0.0).unwrap();
        let with_dt = ftrl_select(&white.x_tilde, &white.tilde_norms_sq, Some(&white.sigma_inv), &RoundingSpec::new(reg, 2.0, 30)).unwrap();
        ridge_same &= plain.indices == ridge0.indices && plain.indices == with_dt.indices();
    }
    Check {
        id: 9,
        name: "baseline oracle equivalence (greedy-A, MMD, lambda=0 ridge)",
        passed: greedy_ok && mmd_err <= 1e-12 && ridge_same,
        detail: format!("greedy max rel err={greedy_err:.2e}, MMD max increment err={mmd_err:.2e}, lambda=0 identical={ridge_same}"),
        notes: Vec::new(),
    }
}

fn check_c1(runs: &Runs) -> Check {
    let finite = runs.c1.iter().all(|(_, v)| v.is_finite() && *v >= 2.0);
    let (lo, hi) = runs.c1.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, v)| (a.min(*v), b.max(*v)));
    let in_band = runs.c1.iter().filter(|(_, v)| (2.5..=3.5).contains(v)).count();
    Check {
        id: 10,
        name: "C1 diagnostic finite and >= 2",
        passed: !runs.c1.is_empty() && finite,
        detail: format!("{} values in [{lo:.3}, {hi:.3}]; soft check: {in_band} inside [2.5, 3.5]", runs.c1.len()),
        notes: Vec::new(),
    }
}

fn check_determinism(first: &Runs) -> Check {
    let mut again = Runs { traces: Vec::new(), rows: BTreeMap::new(), c1: Vec::new() };
    check_brute_force(&mut again);
    check_guarantee(&mut again);
    check_ridge_guarantee(&mut again);
    check_fig7(&mut again, false);
    check_risk_correlation(&mut again);
    let differing: Vec<&str> = first.rows.iter().filter(|(k, v)| again.rows.get(*k) != Some(*v)).map(|(k, _)| *k).collect();
    Check {
        id: 11,
        name: "determinism of repeated acceptance runs",
        passed: first.rows.len() == 5 && differing.is_empty(),
        detail: if differing.is_empty() {
            format!("{} result CSVs byte-identical ({} bytes)", first.rows.len(), first.rows.values().map(Vec::len).sum::<usize>())
        } else {
            format!("differing: {}", differing.join(", "))
        },
        notes: Vec::new(),
    }
}

fn main() {
    // `cargo test -- --list` and filters from libtest are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut runs = Runs { traces: Vec::new(), rows: BTreeMap::new(), c1: Vec::new() };
    let mut checks = vec![
        check_brute_force(&mut runs),
        check_guarantee(&mut runs),
        check_ridge_guarantee(&mut runs),
        check_ftrl_invariants(),
        check_gradients(),
        check_fig7(&mut runs, true),
        check_risk_correlation(&mut runs),
        check_baseline_oracles(),
    ];
    checks.push(check_bounds(&runs));
    checks.push(check_c1(&runs));
    checks.push(check_determinism(&runs));
    checks.sort_by_key(|c| c.id);
    for c in &checks {
        println!("[{}] {:>2}. {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
        for n in &c.notes {
            println!("       note: {n}");
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
