//! Sweeps over criteria, budgets, methods and trials, with CSV, plot-data
//! and SVG outputs.
//!
//! Every cell draws its randomness from `seed` and its coordinates, and
//! results are collected in cell order, so a run is byte-reproducible no
//! matter how many workers execute it. Wall-clock times go to a separate
//! `timings.csv` to keep `results.csv` deterministic.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use crate::criteria::{relative_objective, Criterion, CriterionKind};
use crate::data::{self, BlockSpec, GraphEmbeddingSpec, SyntheticSpec};
use crate::error::{DesignError, Result};
use crate::evalrisk::{evaluate_selection_accuracy, sample_labels, FitOptions, LogisticModel};
use crate::ftrl::{grid_search_alpha, prescribe_parameters, round_and_certify, PrescriptionMode, Regularizer, RoundingSpec, SelectionResult};
use crate::pool::{DesignPool, Selection};
use crate::relax::{solve_relaxed, MirrorDescentConfig, RelaxedSolution};
use crate::rng::RngSeed;

/// Environment variable overriding the number of worker threads.
pub const WORKERS_ENV: &str = "REGMIN_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Block-diagonal decay blocks.
    Synthetic {
        blocks: Vec<BlockSpec>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// The 2000 x 100 two-block pool.
    BenchmarkSynthetic,
    Gaussian { n: usize, d: usize },
    /// CSV pool, optionally with 0-based labels.
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<PathBuf>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescriptionSpec {
    pub epsilon: f64,
    /// `a`, `b`, `c` or `ridge`.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
}

impl PrescriptionSpec {
    pub fn mode(&self) -> Result<PrescriptionMode> {
        match self.mode.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(PrescriptionMode::EntropyA),
            "b" => Ok(PrescriptionMode::EntropyB {
                c1_estimate: self.c1.ok_or_else(|| DesignError::Config("prescription mode b needs c1".into()))?,
            }),
            "c" => Ok(PrescriptionMode::LHalfC),
            "ridge" => Ok(PrescriptionMode::LHalfRidge),
            other => Err(DesignError::Config(format!("unknown prescription mode '{other}'"))),
        }
    }
}

/// Learning-rate grid used when a regret-min method gives none.
pub const DEFAULT_ALPHA_GRID: [f64; 7] = [0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodSpec {
    RegretMin {
        regularizer: Regularizer,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_grid: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prescribe: Option<PrescriptionSpec>,
        #[serde(default)]
        with_replacement: bool,
    },
    Uniform,
    MaxWeights,
    Weighted {
        #[serde(default)]
        distinct: bool,
    },
    GreedyA {
        #[serde(default = "ten")]
        initial_factor: usize,
    },
    Mmd {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    Kmeans {
        #[serde(default = "kmeans_iters")]
        max_iters: usize,
    },
    Rrqr,
}

fn ten() -> usize {
    10
}

fn kmeans_iters() -> usize {
    300
}

impl MethodSpec {
    /// Name used in result tables.
    pub fn label(&self) -> String {
        match self {
            MethodSpec::RegretMin { regularizer, .. } => format!("regret-min-{regularizer}"),
            other => other.baseline().expect("baseline").0.to_string(),
        }
    }

    fn baseline(&self) -> Option<(BaselineMethod, BaselineConfig)> {
        let mut cfg = BaselineConfig::default();
        let m = match self {
            MethodSpec::RegretMin { .. } => return None,
            MethodSpec::Uniform => BaselineMethod::Uniform,
            MethodSpec::MaxWeights => BaselineMethod::MaxWeights,
            MethodSpec::Weighted { distinct } => {
                cfg.weighted_distinct = *distinct;
                BaselineMethod::Weighted
            }
            MethodSpec::GreedyA { initial_factor } => {
                cfg.greedy_initial_factor = *initial_factor;
                BaselineMethod::GreedyA
            }
            MethodSpec::Mmd { gamma } => {
                cfg.kernel_gamma = *gamma;
                BaselineMethod::Mmd
            }
            MethodSpec::Kmeans { max_iters } => {
                cfg.kmeans_max_iters = *max_iters;
                BaselineMethod::Kmeans
            }
            MethodSpec::Rrqr => BaselineMethod::Rrqr,
        };
        Some((m, cfg))
    }

    /// Randomized methods run every trial; deterministic ones run trial 0 only.
    pub fn is_randomized(&self) -> bool {
        self.baseline().is_some_and(|(m, _)| m.is_randomized())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxSettings {
    #[serde(default = "relax_iters")]
    pub max_iters: usize,
    #[serde(default = "relax_tol")]
    pub rel_tol: f64,
}

fn relax_iters() -> usize {
    20_000
}

fn relax_tol() -> f64 {
    1e-5
}

impl Default for RelaxSettings {
    fn default() -> Self {
        RelaxSettings {
            max_iters: relax_iters(),
            rel_tol: relax_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSpec {
    /// Draw labels from a random logistic model with this many classes when
    /// the dataset carries none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_classes: Option<usize>,
    /// Defaults to `1/k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(default)]
    pub balanced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: RngSeed,
    pub output_dir: PathBuf,
    pub dataset: DatasetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<GraphEmbeddingSpec>,
    pub criteria: Vec<CriterionKind>,
    pub budgets: Vec<usize>,
    #[serde(default = "one_trial")]
    pub trials: usize,
    /// Ridge `lambda` for the relaxation, the rounder and every objective.
    #[serde(default)]
    pub ridge: f64,
    #[serde(default)]
    pub relax: RelaxSettings,
    pub methods: Vec<MethodSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationSpec>,
    #[serde(default = "yes")]
    pub plots: bool,
}

fn one_trial() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| DesignError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DesignError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        // Relative data paths are taken relative to the config file.
        if let (DatasetSpec::File { path: p, labels }, Some(dir)) = (&mut cfg.dataset, path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
            if let Some(l) = labels.as_mut().filter(|l| l.is_relative()) {
                *l = dir.join(&*l);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DesignError::Config(m.to_string()));
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return bad("budgets must be a nonempty list of positive integers");
        }
        if self.criteria.is_empty() {
            return bad("criteria must be nonempty");
        }
        if self.methods.is_empty() {
            return bad("methods must be nonempty");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return bad("ridge must be nonnegative");
        }
        for m in &self.methods {
            if let MethodSpec::RegretMin { alpha, alpha_grid, prescribe, .. } = m {
                let given = alpha.is_some() as usize + alpha_grid.is_some() as usize + prescribe.is_some() as usize;
                if given > 1 {
                    return bad("a regret-min method takes at most one of alpha, alpha_grid, prescribe");
                }
                if alpha.is_some_and(|a| !(a > 0.0)) || alpha_grid.as_ref().is_some_and(|g| g.is_empty() || g.iter().any(|a| !(*a > 0.0))) {
                    return bad("learning rates must be positive");
                }
                if let Some(p) = prescribe {
                    p.mode()?;
                }
            }
        }
        let mut labels: Vec<String> = self.methods.iter().map(MethodSpec::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("each method may appear once");
        }
        Ok(())
    }

    /// The config with every default filled in, as TOML.
    pub fn resolved_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| DesignError::Config(e.to_string()))
    }

    /// SHA-256 of the resolved config, ignoring where outputs are written.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.resolved_toml()?.as_bytes())))
    }
}

/// The pool (after preprocessing) and optional full-pool labels.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<(DesignPool, Option<(Vec<usize>, usize)>)> {
    let data_seed = cfg.seed.derive(&[0xda7a]);
    let (pool, mut labels) = match &cfg.dataset {
        DatasetSpec::Synthetic { blocks, scale } => (
            data::generate_synthetic(&SyntheticSpec {
                blocks: blocks.clone(),
                seed: data_seed,
                scale: *scale,
            })?,
            None,
        ),
        DatasetSpec::BenchmarkSynthetic => (data::generate_benchmark_synthetic(data_seed)?, None),
        DatasetSpec::Gaussian { n, d } => (data::gaussian_pool(*n, *d, data_seed)?, None),
        DatasetSpec::File { path, labels } => {
            let pool = data::read_pool_csv(path)?;
            let labels = match labels {
                Some(p) => {
                    let y = data::read_index_csv(p)?;
                    if y.len() != pool.n() {
                        return Err(DesignError::Data(format!("{} labels for {} points", y.len(), pool.n())));
                    }
                    let c = y.iter().max().map_or(0, |m| m + 1).max(2);
                    Some((y, c))
                }
                None => None,
            };
            (pool, labels)
        }
    };
    let pool = match &cfg.preprocess {
        Some(spec) => data::spectral_embed(&pool, spec)?,
        None => pool,
    };
    if labels.is_none() {
        if let Some(c) = cfg.evaluation.as_ref().and_then(|e| e.planted_classes) {
            let star = LogisticModel::random(c, pool.d(), cfg.seed.derive(&[0x7e7a]))?;
            let all: Vec<usize> = (0..pool.n()).collect();
            labels = Some((sample_labels(&pool, &all, &star, cfg.seed.derive(&[0x1abe]))?.labels, c));
        }
    }
    Ok((pool, labels))
}

/// One row of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub criterion: String,
    pub method: String,
    pub budget: usize,
    pub trial: usize,
    pub status: String,
    pub objective: Option<f64>,
    pub relative_objective: Option<f64>,
    pub tau: Option<f64>,
    pub regret: Option<f64>,
    pub c1: Option<f64>,
    pub alpha: Option<f64>,
    pub accuracy: Option<f64>,
    pub class_coverage: Option<usize>,
    pub error: Option<String>,
}

/// One row of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub criterion: String,
    pub method: String,
    pub budget: usize,
    pub k_over_d: f64,
    pub runs: usize,
    pub failures: usize,
    /// Runs whose selection was singular (infinite objective); excluded from
    /// the means below.
    pub singular: usize,
    pub mean_relative_objective: Option<f64>,
    pub std_relative_objective: Option<f64>,
    pub mean_objective: Option<f64>,
    pub std_objective: Option<f64>,
    pub mean_accuracy: Option<f64>,
}

/// One point of an `alpha` profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaProfileRow {
    pub alpha: f64,
    pub rel_objective: f64,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub config_hash: String,
    pub records: Vec<ResultRecord>,
    pub summary: Vec<SummaryRow>,
    pub output_dir: PathBuf,
    pub failed_cells: usize,
}

struct Labels<'a> {
    y: &'a [usize],
    classes: usize,
    opts: Option<&'a EvaluationSpec>,
}

impl Labels<'_> {
    fn evaluate(&self, pool: &DesignPool, indices: &[usize]) -> Result<(f64, usize)> {
        let mut fit = match self.opts.and_then(|e| e.l2) {
            Some(l2) => FitOptions::new(l2),
            None => FitOptions::default_for(indices.len()),
        };
        fit.balanced = self.opts.is_some_and(|e| e.balanced);
        let r = evaluate_selection_accuracy(pool, indices, self.y, self.classes, &fit)?;
        Ok((r.accuracy, r.classes_covered))
    }
}

/// Rounds once per `alpha` and picks the smallest selected objective; the
/// profile reports the relative objective and, with labels, accuracy.
pub fn alpha_grid_search(
    pool: &DesignPool,
    relaxed: &RelaxedSolution,
    c: &Criterion,
    base: &RoundingSpec,
    grid: &[f64],
    labels: Option<(&[usize], usize, &FitOptions)>,
) -> Result<(SelectionResult, Vec<AlphaProfileRow>)> {
    let (best, profile) = grid_search_alpha(pool, relaxed, c, base, grid)?;
    let mut rows = Vec::with_capacity(profile.len());
    for p in profile {
        let accuracy = match labels {
            Some((y, classes, fit)) => {
                let spec = RoundingSpec { alpha: p.alpha, ..*base };
                let (r, _) = round_and_certify(pool, relaxed, c, &spec)?;
                Some(evaluate_selection_accuracy(pool, &r.indices, y, classes, fit)?.accuracy)
            }
            None => None,
        };
        rows.push(AlphaProfileRow {
            alpha: p.alpha,
            rel_objective: p.relative_objective,
            accuracy,
        });
    }
    Ok((best, rows))
}

struct CellOutput {
    record: ResultRecord,
    seconds: f64,
    profile: Option<Vec<AlphaProfileRow>>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: &'a str,
    pool: &'a DesignPool,
    criteria: &'a [Criterion],
    relaxed: &'a BTreeMap<(usize, usize), std::result::Result<RelaxedSolution, String>>,
    labels: Option<Labels<'a>>,
}

fn selection_objective(pool: &DesignPool, c: &Criterion, sel: &Selection, ridge: f64) -> Result<f64> {
    let mut g = pool.selection_gram(sel);
    if ridge > 0.0 {
        g = g.shifted(ridge);
    }
    match c.value(&g) {
        Ok(v) => Ok(v),
        Err(DesignError::Singular { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn run_cell(ctx: &Ctx<'_>, ci: usize, budget: usize, mi: usize, trial: usize) -> CellOutput {
    let start = Instant::now();
    let method = &ctx.cfg.methods[mi];
    let c = &ctx.criteria[ci];
    let mut rec = ResultRecord {
        config_hash: ctx.hash.to_string(),
        criterion: c.kind().to_string(),
        method: method.label(),
        budget,
        trial,
        status: "ok".into(),
        objective: None,
        relative_objective: None,
        tau: None,
        regret: None,
        c1: None,
        alpha: None,
        accuracy: None,
        class_coverage: None,
        error: None,
    };
    let mut profile = None;
    let outcome: Result<Vec<usize>> = (|| {
        let relaxed = ctx.relaxed[&(ci, budget)].as_ref().map_err(|e| DesignError::Numeric(format!("relaxation failed: {e}")))?;
        let seed = ctx.cfg.seed.derive(&[ci as u64, budget as u64, mi as u64, trial as u64]);
        match method {
            MethodSpec::RegretMin {
                regularizer,
                alpha,
                alpha_grid,
                prescribe,
                with_replacement,
            } => {
                let base = RoundingSpec::new(*regularizer, 1.0, budget).with_replacement(*with_replacement).with_ridge(ctx.cfg.ridge);
                let result = if let Some(a) = alpha {
                    round_and_certify(ctx.pool, relaxed, c, &RoundingSpec { alpha: *a, ..base })?.0
                } else if let Some(p) = prescribe {
                    let (a, _) = prescribe_parameters(ctx.pool.d(), p.epsilon, p.mode()?)?;
                    round_and_certify(ctx.pool, relaxed, c, &RoundingSpec { alpha: a, ..base })?.0
                } else {
                    let grid = alpha_grid.as_deref().unwrap_or(&DEFAULT_ALPHA_GRID);
                    let (best, prof) = alpha_grid_search(ctx.pool, relaxed, c, &base, grid, None)?;
                    profile = Some(prof);
                    best
                };
                rec.objective = Some(result.objective_selected);
                rec.relative_objective = Some(result.relative_objective);
                rec.tau = Some(result.tau);
                rec.regret = Some(result.regret);
                rec.c1 = Some(result.c1_diagnostic);
                rec.alpha = Some(result.alpha_used);
                Ok(result.indices)
            }
            other => {
                let (m, bcfg) = other.baseline().expect("baseline variant");
                let sel = run_baseline(m, ctx.pool, Some(&relaxed.pi), budget, seed, &bcfg)?;
                let obj = selection_objective(ctx.pool, c, &sel, ctx.cfg.ridge)?;
                rec.objective = Some(obj);
                rec.relative_objective = Some(relative_objective(c.kind(), obj, relaxed.objective_value));
                Ok(sel.indices().to_vec())
            }
        }
    })();
    match outcome {
        Ok(indices) => {
            if let Some(l) = &ctx.labels {
                match l.evaluate(ctx.pool, &indices) {
                    Ok((acc, cov)) => {
                        rec.accuracy = Some(acc);
                        rec.class_coverage = Some(cov);
                    }
                    Err(e) => rec.error = Some(format!("evaluation: {e}")),
                }
            }
        }
        Err(e) => {
            rec.status = format!("error{}", e.exit_code());
            rec.error = Some(e.to_string());
        }
    }
    CellOutput {
        record: rec,
        seconds: start.elapsed().as_secs_f64(),
        profile,
    }
}

fn worker_pool() -> Result<Option<rayon::ThreadPool>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| DesignError::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'")))?;
            if n == 0 {
                return Err(DesignError::Config(format!("{WORKERS_ENV} must be positive")));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map(Some)
                .map_err(|e| DesignError::Config(e.to_string()))
        }
        Err(_) => Ok(None),
    }
}

/// Runs the sweep and writes every output file into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    match worker_pool()? {
        Some(tp) => tp.install(|| run_inner(cfg)),
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let hash = cfg.hash()?;
    let (pool, labels) = load_dataset(cfg)?;
    let criteria: Vec<Criterion> = cfg.criteria.iter().map(|&k| Criterion::new(k, &pool)).collect();

    let relax_keys: Vec<(usize, usize)> = (0..criteria.len()).flat_map(|ci| cfg.budgets.iter().map(move |&k| (ci, k))).collect();
    let relaxed: BTreeMap<(usize, usize), std::result::Result<RelaxedSolution, String>> = relax_keys
        .par_iter()
        .map(|&(ci, k)| {
            let mdc = MirrorDescentConfig::new(k).with_ridge(cfg.ridge).with_tol(cfg.relax.rel_tol).with_max_iters(cfg.relax.max_iters);
            ((ci, k), solve_relaxed(&pool, &criteria[ci], &mdc).map_err(|e| e.to_string()))
        })
        .collect();

    let ctx = Ctx {
        cfg,
        hash: &hash,
        pool: &pool,
        criteria: &criteria,
        relaxed: &relaxed,
        labels: labels.as_ref().map(|(y, c)| Labels {
            y,
            classes: *c,
            opts: cfg.evaluation.as_ref(),
        }),
    };
    let mut cells = Vec::new();
    for ci in 0..criteria.len() {
        for &k in &cfg.budgets {
            for (mi, m) in cfg.methods.iter().enumerate() {
                let trials = if m.is_randomized() { cfg.trials } else { 1 };
                for t in 0..trials {
                    cells.push((ci, k, mi, t));
                }
            }
        }
    }
    let outputs: Vec<CellOutput> = cells.par_iter().map(|&(ci, k, mi, t)| run_cell(&ctx, ci, k, mi, t)).collect();

    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| DesignError::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    data::write_text(&out.join("config.resolved.toml"), &cfg.resolved_toml()?)?;
    data::write_text(&out.join("config.sha256"), &format!("{hash}\n"))?;

    let records: Vec<ResultRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    write_csv(&out.join("results.csv"), &records)?;

    let mut timings = String::from("criterion,method,budget,trial,wall_time_s\n");
    for o in &outputs {
        let r = &o.record;
        let _ = writeln!(timings, "{},{},{},{},{:.6}", r.criterion, r.method, r.budget, r.trial, o.seconds);
    }
    data::write_text(&out.join("timings.csv"), &timings)?;

    for (o, &(ci, k, mi, t)) in outputs.iter().zip(&cells) {
        if let Some(p) = &o.profile {
            let m = &cfg.methods[mi];
            let name = format!("alpha_profile_{}_{}_k{}_t{}.csv", criteria[ci].kind(), m.label(), k, t);
            write_csv(&out.join(name), p)?;
        }
    }

    let summary = summarize(&records, pool.d());
    write_csv(&out.join("summary.csv"), &summary)?;
    if cfg.plots {
        for kind in &cfg.criteria {
            let rows: Vec<&SummaryRow> = summary.iter().filter(|r| r.criterion == kind.to_string()).collect();
            let (csv, svg) = plot_outputs(&rows, &cfg.methods.iter().map(MethodSpec::label).collect::<Vec<_>>(), *kind);
            data::write_text(&out.join(format!("plot_{kind}.csv")), &csv)?;
            data::write_text(&out.join(format!("plot_{kind}.svg")), &svg)?;
        }
    }

    let failed = records.iter().filter(|r| r.status != "ok").count();
    if failed == records.len() {
        let first = records.first().and_then(|r| r.error.clone()).unwrap_or_default();
        return Err(DesignError::Numeric(format!("every cell failed; first error: {first}")));
    }
    Ok(ExperimentOutcome {
        config_hash: hash,
        records,
        summary,
        output_dir: out.clone(),
        failed_cells: failed,
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| DesignError::Data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| DesignError::Data(e.to_string()))?;
    data::write_text(path, &String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| DesignError::Data(e.to_string()))?;
    r.deserialize().map(|rec| rec.map_err(|e| DesignError::Data(e.to_string()))).collect()
}

fn mean_std(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (Some(m), Some(var.sqrt()))
}

/// Mean and sample standard deviation over finite values per (criterion,
/// method, budget), in first-appearance order.
pub fn summarize(records: &[ResultRecord], d: usize) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for r in records {
        let key = (r.criterion.clone(), r.method.clone(), r.budget);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(crit, method, budget)| {
            let group: Vec<&ResultRecord> = records.iter().filter(|r| r.criterion == crit && r.method == method && r.budget == budget).collect();
            let ok: Vec<&&ResultRecord> = group.iter().filter(|r| r.status == "ok").collect();
            let singular = ok.iter().filter(|r| r.objective.is_some_and(f64::is_infinite)).count();
            let rel: Vec<f64> = ok.iter().filter_map(|r| r.relative_objective).filter(|v| v.is_finite()).collect();
            let obj: Vec<f64> = ok.iter().filter_map(|r| r.objective).filter(|v| v.is_finite()).collect();
            let acc: Vec<f64> = ok.iter().filter_map(|r| r.accuracy).collect();
            let (mr, sr) = mean_std(&rel);
            let (mo, so) = mean_std(&obj);
            SummaryRow {
                k_over_d: budget as f64 / d as f64,
                runs: group.len(),
                failures: group.len() - ok.len(),
                singular,
                mean_relative_objective: mr,
                std_relative_objective: sr,
                mean_objective: mo,
                std_objective: so,
                mean_accuracy: mean_std(&acc).0,
                criterion: crit,
                method,
                budget,
            }
        })
        .collect()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// Plot data (`k_over_d` plus one mean-relative-objective column per method)
/// and a matching SVG line chart.
fn plot_outputs(rows: &[&SummaryRow], methods: &[String], kind: CriterionKind) -> (String, String) {
    let mut xs: Vec<f64> = rows.iter().map(|r| r.k_over_d).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let value = |m: &str, x: f64| {
        rows.iter()
            .find(|r| r.method == m && r.k_over_d == x)
            .and_then(|r| r.mean_relative_objective)
            .filter(|v| v.is_finite())
    };
    let mut csv = String::from("k_over_d");
    for m in methods {
        csv.push(',');
        csv.push_str(m);
    }
    csv.push('\n');
    for &x in &xs {
        csv.push_str(&format!("{x}"));
        for m in methods {
            csv.push(',');
            if let Some(v) = value(m, x) {
                csv.push_str(&format!("{v}"));
            }
        }
        csv.push('\n');
    }

    let (w, h, pad) = (640.0, 400.0, 60.0);
    let ys: Vec<f64> = methods.iter().flat_map(|m| xs.iter().filter_map(move |&x| value(m, x))).collect();
    let (x0, x1) = (xs.first().copied().unwrap_or(0.0), xs.last().copied().unwrap_or(1.0));
    let (y0, y1) = (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = if ys.is_empty() { (0.0, 1.0) } else { (y0, y1) };
    let sx = |x: f64| pad + if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.5 } * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - if y1 > y0 { (y - y0) / (y1 - y0) } else { 0.5 } * (h - 2.0 * pad);
    let mut svg = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n");
    svg += &format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n");
    svg += &format!(
        "<line x1=\"{pad}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/><line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = h - pad,
        r = w - pad
    );
    svg += &format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">k/d</text>\n", w / 2.0, h - 20.0);
    svg += &format!("<text x=\"20\" y=\"{}\" transform=\"rotate(-90 20 {})\" text-anchor=\"middle\">relative objective ({kind})</text>\n", h / 2.0, h / 2.0);
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        svg += &format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"{anchor}\">{x:.3}</text>\n", sx(x), h - pad + 15.0);
    }
    for y in [y0, y1] {
        svg += &format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{y:.4}</text>\n", pad - 5.0, sy(y) + 4.0);
    }
    for (i, m) in methods.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = xs.iter().filter_map(|&x| value(m, x).map(|v| format!("{:.2},{:.2}", sx(x), sy(v)))).collect();
        if !pts.is_empty() {
            svg += &format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n", pts.join(" "));
        }
        svg += &format!("<text x=\"{}\" y=\"{}\" fill=\"{color}\">{m}</text>\n", w - pad + 5.0 - 120.0, pad + 15.0 * i as f64);
    }
    svg += "</svg>\n";
    (csv, svg)
}
