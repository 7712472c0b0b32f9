//! `regmin`: relax, round, baseline, evaluate and sweep from the shell.
//!
//! Exit codes: 0 success, 2 configuration or argument error, 3 data error,
//! 4 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use regmin::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use regmin::criteria::{check_assumption_f, AssumptionProperty, random_assumption_samples, relative_objective};
use regmin::data::{self, GraphEmbeddingSpec, SelectionRecord, SyntheticSpec};
use regmin::evalrisk::{evaluate_selection_accuracy, risk_correlation_study, FitOptions, LogisticModel, StudyConfig};
use regmin::experiment::{alpha_grid_search, run_experiment, write_csv, ExperimentConfig, PrescriptionSpec, DEFAULT_ALPHA_GRID};
use regmin::ftrl::{ftrl_select, prescribe_parameters, round_and_certify, verify_lambda_min_bound, whiten, PrescriptionMode, Regularizer, RoundingSpec, SelectionResult};
use regmin::relax::{solve_relaxed, MirrorDescentConfig, RelaxedSolution};
use regmin::ridge::verify_ridge_per_step_bounds;
use regmin::{Criterion, CriterionKind, DesignError, DesignPool, Result, RngSeed};

#[derive(Parser)]
#[command(name = "regmin", version, about = "Near-optimal experimental design by regret minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the continuous relaxation and write the optimal weights.
    Relax(RelaxArgs),
    /// Select a subset with regret minimization or a baseline.
    Select(SelectArgs),
    /// Fit a logistic model on a selection and report pool accuracy.
    Evaluate(EvaluateArgs),
    /// Correlate the V-objective of random subsets with excess risk.
    Riskstudy(RiskArgs),
    /// Generate a synthetic pool.
    Synth(SynthArgs),
    /// Spectral embedding through a k-NN graph Laplacian.
    Embed(EmbedArgs),
    /// Run a sweep described by a TOML config.
    Run(RunArgs),
    /// Invariant checks.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Args)]
struct RelaxOpts {
    /// Pool matrix, one point per CSV row.
    #[arg(long = "in", value_name = "X.csv")]
    input: PathBuf,
    /// A, D, E, V or G.
    #[arg(long, value_parser = parse_criterion)]
    criterion: CriterionKind,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
}

#[derive(Args)]
struct RelaxArgs {
    #[command(flatten)]
    opts: RelaxOpts,
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    #[arg(long, value_name = "weights.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    RegretMin,
    RidgeRegretMin,
    Uniform,
    MaxWeights,
    Weighted,
    GreedyA,
    Mmd,
    Kmeans,
    Rrqr,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    opts: RelaxOpts,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value = "entropy")]
    regularizer: Regularizer,
    #[arg(long, conflicts_with_all = ["alpha_grid", "prescribe"])]
    alpha: Option<f64>,
    /// Comma-separated learning rates; the smallest objective wins.
    #[arg(long, value_delimiter = ',', conflicts_with = "prescribe")]
    alpha_grid: Option<Vec<f64>>,
    /// `eps=<v>,mode=<a|b|c|ridge>[,c1=<v>]`.
    #[arg(long)]
    prescribe: Option<String>,
    #[arg(long)]
    with_replacement: bool,
    #[arg(long, conflicts_with = "ridge_preset")]
    ridge: Option<f64>,
    /// `scaled`: lambda = 1e-5 * k.
    #[arg(long, value_parser = ["scaled"])]
    ridge_preset: Option<String>,
    /// Reuse relaxed weights from `relax` instead of solving again.
    #[arg(long, value_name = "weights.csv")]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw weighted samples without repeats.
    #[arg(long)]
    distinct: bool,
    #[arg(long, default_value_t = 10)]
    greedy_initial_factor: usize,
    #[arg(long)]
    kernel_gamma: Option<f64>,
    #[arg(long, default_value_t = 300)]
    kmeans_max_iters: usize,
    /// JSON result record (an array when `--trials` > 1).
    #[arg(long, value_name = "result.json")]
    out: PathBuf,
    /// Selected indices; `_t<i>` is appended per trial when `--trials` > 1.
    #[arg(long, value_name = "indices.csv")]
    indices_out: Option<PathBuf>,
    /// Per-alpha profile when grid searching.
    #[arg(long, value_name = "profile.csv")]
    profile_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long = "in", value_name = "X.csv")]
    input: PathBuf,
    #[arg(long, value_name = "indices.csv")]
    selection: PathBuf,
    /// 0-based class of every pool point.
    #[arg(long, value_name = "labels.csv")]
    labels: PathBuf,
    /// Defaults to 1/k.
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    balanced: bool,
}

#[derive(Args)]
struct RiskArgs {
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 4000)]
    pool_size: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    budget: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    subsets: usize,
    #[arg(long, default_value_t = 20)]
    redraws: usize,
    #[arg(long, default_value_t = 20.0)]
    tilt_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "study.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Benchmark,
    Blocks,
    Gaussian,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    /// Blocks as `<rows>x<cols>@<decay>`, comma-separated; `gaussian` takes `<n>x<d>`.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "X.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long, default_value_t = 256)]
    neighbors: usize,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    #[arg(long = "in", value_name = "X.csv")]
    input: PathBuf,
    #[arg(long, value_name = "E.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "config.toml")]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Monotonicity, reciprocal multiplicativity and convexity of a criterion on random PD pairs.
    AssumptionF {
        #[arg(long, value_parser = parse_criterion)]
        criterion: CriterionKind,
        /// Reference pool, required for V and G; sets the dimension.
        #[arg(long = "in", value_name = "X.csv")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Prefix lower bounds on lambda_min (and ridge per-step bounds) along one rounding run.
    Bounds {
        #[command(flatten)]
        opts: RelaxOpts,
        #[arg(long, default_value = "entropy")]
        regularizer: Regularizer,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        ridge: f64,
        #[arg(long)]
        with_replacement: bool,
    },
}

fn parse_criterion(s: &str) -> std::result::Result<CriterionKind, String> {
    s.parse::<CriterionKind>().map_err(|e| e.to_string())
}

fn load_relaxed(opts: &RelaxOpts, ridge: f64) -> Result<(DesignPool, Criterion, RelaxedSolution)> {
    let pool = data::read_pool_csv(&opts.input)?;
    let c = Criterion::new(opts.criterion, &pool);
    let cfg = MirrorDescentConfig::new(opts.budget).with_ridge(ridge).with_tol(opts.tol).with_max_iters(opts.max_iters);
    let relaxed = solve_relaxed(&pool, &c, &cfg)?;
    Ok((pool, c, relaxed))
}

fn cmd_relax(a: &RelaxArgs) -> Result<()> {
    let (_, _, r) = load_relaxed(&a.opts, a.ridge)?;
    let lines: String = r.pi.iter().map(|w| format!("{w:.16e}\n")).collect();
    data::write_text(&a.out, &lines)?;
    println!(
        "{}",
        json!({"f_diamond": r.objective_value, "iterations": r.iterations, "converged": r.converged, "budget": r.budget_k, "ridge": r.ridge_lambda})
    );
    Ok(())
}

fn parse_prescription(s: &str) -> Result<(PrescriptionMode, f64)> {
    let (mut eps, mut mode, mut c1) = (None, None, None);
    for part in s.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| DesignError::Config(format!("bad prescription term '{part}'")))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| DesignError::Config(format!("{k}: {e}")));
        match k.trim() {
            "eps" => eps = Some(num(v)?),
            "mode" => mode = Some(v.trim().to_string()),
            "c1" => c1 = Some(num(v)?),
            other => return Err(DesignError::Config(format!("unknown prescription key '{other}'"))),
        }
    }
    let spec = PrescriptionSpec {
        epsilon: eps.ok_or_else(|| DesignError::Config("prescription needs eps".into()))?,
        mode: mode.ok_or_else(|| DesignError::Config("prescription needs mode".into()))?,
        c1,
    };
    Ok((spec.mode()?, spec.epsilon))
}

fn record_from_result(method: &str, c: &Criterion, k: usize, r: &SelectionResult) -> SelectionRecord {
    SelectionRecord {
        method: method.to_string(),
        criterion: c.kind().to_string(),
        budget: k,
        indices: r.indices.clone(),
        with_replacement: r.with_replacement,
        objective: r.objective_selected,
        f_diamond: Some(r.f_diamond),
        relative_objective: Some(r.relative_objective),
        tau: Some(r.tau),
        regret_trace: Some(r.regret_trace.clone()),
        c1: Some(r.c1_diagnostic),
        alpha: Some(r.alpha_used),
        ridge_lambda: r.ridge_lambda,
        regularizer: Some(r.regularizer.to_string()),
    }
}

fn baseline_of(m: MethodArg) -> Option<BaselineMethod> {
    Some(match m {
        MethodArg::RegretMin | MethodArg::RidgeRegretMin => return None,
        MethodArg::Uniform => BaselineMethod::Uniform,
        MethodArg::MaxWeights => BaselineMethod::MaxWeights,
        MethodArg::Weighted => BaselineMethod::Weighted,
        MethodArg::GreedyA => BaselineMethod::GreedyA,
        MethodArg::Mmd => BaselineMethod::Mmd,
        MethodArg::Kmeans => BaselineMethod::Kmeans,
        MethodArg::Rrqr => BaselineMethod::Rrqr,
    })
}

fn trial_path(p: &Path, t: usize, trials: usize) -> PathBuf {
    if trials == 1 {
        return p.to_path_buf();
    }
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = p.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    p.with_file_name(format!("{stem}_t{t}{ext}"))
}

fn cmd_select(a: &SelectArgs) -> Result<()> {
    if a.trials == 0 {
        return Err(DesignError::Config("--trials must be at least 1".into()));
    }
    let k = a.opts.budget;
    let ridge = match (a.ridge, a.ridge_preset.as_deref()) {
        (Some(l), _) => l,
        (None, Some(_)) => 1e-5 * k as f64,
        (None, None) => 0.0,
    };
    if a.method == MethodArg::RidgeRegretMin && !(ridge > 0.0) {
        return Err(DesignError::Config("ridge-regret-min needs --ridge > 0 or --ridge-preset scaled".into()));
    }
    let pool = data::read_pool_csv(&a.opts.input)?;
    let c = Criterion::new(a.opts.criterion, &pool);
    let relaxed = match &a.weights {
        Some(p) => RelaxedSolution::from_weights(&pool, &c, data::read_vector_csv(p)?, ridge)?,
        None => solve_relaxed(&pool, &c, &MirrorDescentConfig::new(k).with_ridge(ridge).with_tol(a.opts.tol).with_max_iters(a.opts.max_iters))?,
    };

    let mut records = Vec::new();
    match baseline_of(a.method) {
        None => {
            let base = RoundingSpec::new(a.regularizer, 1.0, k).with_replacement(a.with_replacement).with_ridge(ridge);
            let result = if let Some(alpha) = a.alpha {
                round_and_certify(&pool, &relaxed, &c, &RoundingSpec { alpha, ..base })?.0
            } else if let Some(p) = &a.prescribe {
                let (mode, eps) = parse_prescription(p)?;
                if mode.regularizer() != a.regularizer {
                    return Err(DesignError::Config(format!("prescription mode targets the {} regularizer", mode.regularizer())));
                }
                let (alpha, k_min) = prescribe_parameters(pool.d(), eps, mode)?;
                if k < k_min {
                    eprintln!("warning: budget {k} is below the prescribed {k_min}; the guarantee does not apply");
                }
                round_and_certify(&pool, &relaxed, &c, &RoundingSpec { alpha, ..base })?.0
            } else {
                let grid = a.alpha_grid.as_deref().unwrap_or(&DEFAULT_ALPHA_GRID);
                let (best, profile) = alpha_grid_search(&pool, &relaxed, &c, &base, grid, None)?;
                if let Some(p) = &a.profile_out {
                    write_csv(p, &profile)?;
                }
                best
            };
            let name = if ridge > 0.0 { "ridge-regret-min" } else { "regret-min" };
            records.push(record_from_result(name, &c, k, &result));
        }
        Some(m) => {
            let cfg = BaselineConfig {
                greedy_initial_factor: a.greedy_initial_factor,
                kernel_gamma: a.kernel_gamma,
                kmeans_max_iters: a.kmeans_max_iters,
                weighted_distinct: a.distinct,
                ..BaselineConfig::default()
            };
            let trials = if m.is_randomized() { a.trials } else { 1 };
            for t in 0..trials {
                let seed = RngSeed(a.seed).derive(&[t as u64]);
                let sel = run_baseline(m, &pool, Some(&relaxed.pi), k, seed, &cfg)?;
                let mut g = pool.selection_gram(&sel);
                if ridge > 0.0 {
                    g = g.shifted(ridge);
                }
                let obj = match c.value(&g) {
                    Ok(v) => v,
                    Err(DesignError::Singular { .. }) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                records.push(SelectionRecord {
                    method: m.to_string(),
                    criterion: c.kind().to_string(),
                    budget: k,
                    indices: sel.indices().to_vec(),
                    with_replacement: sel.with_replacement(),
                    objective: obj,
                    f_diamond: Some(relaxed.objective_value),
                    relative_objective: Some(relative_objective(c.kind(), obj, relaxed.objective_value)),
                    tau: None,
                    regret_trace: None,
                    c1: None,
                    alpha: None,
                    ridge_lambda: ridge,
                    regularizer: None,
                });
            }
        }
    }
    if let Some(p) = &a.indices_out {
        for (t, r) in records.iter().enumerate() {
            data::write_index_csv(&trial_path(p, t, records.len()), "index", &r.indices)?;
        }
    }
    if records.len() == 1 {
        data::write_json(&a.out, &records[0])?;
    } else {
        data::write_json(&a.out, &records)?;
    }
    for r in &records {
        println!("{} {} k={} objective={} relative={}", r.method, r.criterion, r.budget, r.objective, r.relative_objective.unwrap_or(f64::NAN));
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let pool = data::read_pool_csv(&a.input)?;
    let indices = data::read_index_csv(&a.selection)?;
    let labels = data::read_index_csv(&a.labels)?;
    if labels.len() != pool.n() {
        return Err(DesignError::Data(format!("{} labels for {} pool points", labels.len(), pool.n())));
    }
    let classes = a.classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1).max(2));
    let mut opts = match a.l2 {
        Some(l2) => FitOptions::new(l2),
        None => FitOptions::default_for(indices.len()),
    };
    opts.balanced = a.balanced;
    let r = evaluate_selection_accuracy(&pool, &indices, &labels, classes, &opts)?;
    println!("{}", json!({"accuracy": r.accuracy, "classes_covered": r.classes_covered, "num_classes": r.num_classes, "selected": indices.len()}));
    Ok(())
}

fn cmd_riskstudy(a: &RiskArgs) -> Result<()> {
    let seed = RngSeed(a.seed);
    let pool = data::gaussian_pool(a.pool_size, a.dim, seed.derive(&[1]))?;
    let star = LogisticModel::random(a.classes, a.dim, seed.derive(&[2]))?;
    let mut cfg = StudyConfig::new(a.budget.clone(), a.subsets, seed.derive(&[3]));
    cfg.label_redraws = a.redraws;
    cfg.tilt_max = a.tilt_max;
    let report = risk_correlation_study(&pool, &star, &cfg)?;
    write_csv(&a.out, &report.records)?;
    println!("{}", json!({"points": report.records.len(), "skipped_singular": report.skipped_singular, "spearman": report.spearman, "pearson": report.pearson}));
    Ok(())
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s.split_once('x').ok_or_else(|| DesignError::Config(format!("expected <rows>x<cols>, got '{s}'")))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| DesignError::Config(format!("'{v}': {e}")));
    Ok((p(r)?, p(c)?))
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let seed = RngSeed(a.seed);
    let pool = match a.kind {
        SynthKind::Benchmark => {
            let mut spec = SyntheticSpec::benchmark(seed);
            spec.scale = a.scale;
            data::generate_synthetic(&spec)?
        }
        SynthKind::Blocks => {
            let text = a.spec.as_deref().ok_or_else(|| DesignError::Config("blocks needs --spec".into()))?;
            let mut blocks = Vec::new();
            for item in text.split(',') {
                let (dims, decay) = item.split_once('@').ok_or_else(|| DesignError::Config(format!("expected <rows>x<cols>@<decay>, got '{item}'")))?;
                let (rows, cols) = parse_dims(dims)?;
                let decay = decay.trim().parse::<f64>().map_err(|e| DesignError::Config(format!("decay '{decay}': {e}")))?;
                blocks.push(data::BlockSpec { rows, cols, decay });
            }
            data::generate_synthetic(&SyntheticSpec { blocks, seed, scale: a.scale })?
        }
        SynthKind::Gaussian => {
            let (n, d) = parse_dims(a.spec.as_deref().ok_or_else(|| DesignError::Config("gaussian needs --spec <n>x<d>".into()))?)?;
            data::gaussian_pool(n, d, seed)?
        }
    };
    data::write_matrix_csv(&a.out, pool.features(), None)?;
    println!("{}", json!({"n": pool.n(), "d": pool.d()}));
    Ok(())
}

fn cmd_embed(a: &EmbedArgs) -> Result<()> {
    let pool = data::read_pool_csv(&a.input)?;
    let e = data::spectral_embed(&pool, &GraphEmbeddingSpec { neighbors: a.neighbors, target_dim: a.dim })?;
    data::write_matrix_csv(&a.out, e.features(), None)?;
    println!("{}", json!({"n": e.n(), "d": e.d()}));
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(d) = &a.output_dir {
        cfg.output_dir = d.clone();
    }
    let out = run_experiment(&cfg)?;
    println!(
        "{}",
        json!({"config_hash": out.config_hash, "records": out.records.len(), "failed_cells": out.failed_cells, "output_dir": out.output_dir.display().to_string()})
    );
    Ok(())
}

fn cmd_verify(v: &VerifyCommand) -> Result<bool> {
    match v {
        VerifyCommand::AssumptionF { criterion, input, dim, samples, seed } => {
            let (c, dim) = match input {
                Some(p) => {
                    let pool = data::read_pool_csv(p)?;
                    (Criterion::new(*criterion, &pool), pool.d())
                }
                None => (Criterion::standalone(*criterion)?, *dim),
            };
            let report = check_assumption_f(&c, &random_assumption_samples(dim, *samples, RngSeed(*seed)));
            println!(
                "{}",
                json!({
                    "criterion": criterion.to_string(),
                    "samples": report.samples,
                    "monotone_pairs": report.monotone_pairs_checked,
                    "convexity_failures": report.failures(AssumptionProperty::Convexity),
                    "monotonicity_failures": report.failures(AssumptionProperty::Monotonicity),
                    "sublinearity_failures": report.failures(AssumptionProperty::ReciprocalSublinearity),
                    "evaluation_failures": report.failures(AssumptionProperty::Evaluation),
                    "passed": report.passed()
                })
            );
            Ok(report.passed())
        }
        VerifyCommand::Bounds { opts, regularizer, alpha, ridge, with_replacement } => {
            let (pool, _, relaxed) = load_relaxed(opts, *ridge)?;
            let spec = RoundingSpec::new(*regularizer, *alpha, opts.budget).with_replacement(*with_replacement).with_ridge(*ridge);
            let w = whiten(&pool, &relaxed, *ridge)?;
            let d_tilde = w.sigma_inv.scaled(*ridge / opts.budget as f64);
            let trace = ftrl_select(&w.x_tilde, &w.tilde_norms_sq, Some(&d_tilde), &spec)?;
            let lm = verify_lambda_min_bound(&trace);
            let mut passed = lm.passed;
            let mut out = json!({"lambda_min_bound": {"min_margin": lm.min_margin, "passed": lm.passed}});
            if *ridge > 0.0 {
                let ps = verify_ridge_per_step_bounds(&trace);
                passed &= ps.passed;
                out["ridge_per_step"] = json!({"threshold": ps.threshold, "enforced": ps.enforced, "min_margin": ps.min_margin, "passed": ps.passed});
            }
            out["passed"] = json!(passed);
            println!("{out}");
            Ok(passed)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Relax(a) => cmd_relax(a).map(|_| true),
        Command::Select(a) => cmd_select(a).map(|_| true),
        Command::Evaluate(a) => cmd_evaluate(a).map(|_| true),
        Command::Riskstudy(a) => cmd_riskstudy(a).map(|_| true),
        Command::Synth(a) => cmd_synth(a).map(|_| true),
        Command::Embed(a) => cmd_embed(a).map(|_| true),
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Verify(v) => cmd_verify(v),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
