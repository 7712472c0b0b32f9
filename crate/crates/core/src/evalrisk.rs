//! Multiclass logistic regression on selected points, exact expected risk
//! under a known parameter, and the f_V versus excess-risk study.
//!
//! Labels are 0-based: class `c - 1` is the reference class whose logit is
//! fixed at zero, so a model with `c` classes stores a `(c-1) x d` matrix.

use nalgebra::{DMatrix, DVector};
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::linalg::SpdMatrix;
use crate::pool::{DesignPool, Selection};
use crate::rng::RngSeed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Row `j` holds the coefficients of class `j`, for `j < c - 1`.
    pub theta: DMatrix<f64>,
    pub num_classes: usize,
}

impl LogisticModel {
    pub fn new(theta: DMatrix<f64>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(DesignError::arg("a logistic model needs at least two classes"));
        }
        if theta.nrows() != num_classes - 1 {
            return Err(DesignError::arg(format!(
                "theta has {} rows, expected {} for {num_classes} classes",
                theta.nrows(),
                num_classes - 1
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(DesignError::Numeric("logistic parameters must be finite".into()));
        }
        Ok(LogisticModel { theta, num_classes })
    }

    pub fn zeros(num_classes: usize, d: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(num_classes.saturating_sub(1), d), num_classes)
    }

    /// `theta_j ~ N(0, 1/d)` entrywise.
    pub fn random(num_classes: usize, d: usize, seed: RngSeed) -> Result<Self> {
        let mut rng = seed.rng();
        let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("positive scale");
        Self::new(DMatrix::from_fn(num_classes.saturating_sub(1), d, |_, _| normal.sample(&mut rng)), num_classes)
    }

    pub fn dim(&self) -> usize {
        self.theta.ncols()
    }

    /// `log p(y | x)` for every class.
    pub fn log_probabilities(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut z: Vec<f64> = (0..self.num_classes - 1).map(|j| self.theta.row(j).transpose().dot(x)).collect();
        z.push(0.0);
        log_softmax(&mut z);
        z
    }

    pub fn probabilities(&self, x: &DVector<f64>) -> Vec<f64> {
        self.log_probabilities(x).into_iter().map(f64::exp).collect()
    }

    /// Most likely class, lowest index on ties.
    pub fn predict(&self, x: &DVector<f64>) -> usize {
        let lp = self.log_probabilities(x);
        let mut best = 0;
        for (j, &v) in lp.iter().enumerate() {
            if v > lp[best] {
                best = j;
            }
        }
        best
    }
}

fn log_softmax(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    for v in z.iter_mut() {
        *v -= lse;
    }
}

/// Features with realized labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl LabeledSet {
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(DesignError::arg(format!("{} rows but {} labels", features.nrows(), labels.len())));
        }
        if features.nrows() == 0 {
            return Err(DesignError::arg("labeled set is empty"));
        }
        if num_classes < 2 {
            return Err(DesignError::arg("need at least two classes"));
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(DesignError::arg(format!("label {bad} out of range for {num_classes} classes")));
        }
        Ok(LabeledSet { features, labels, num_classes })
    }

    pub fn from_pool(pool: &DesignPool, indices: &[usize], labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= pool.n()) {
            return Err(DesignError::arg(format!("index {bad} out of range for a pool of {}", pool.n())));
        }
        Self::new(pool.rows_of(indices), labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct classes present.
    pub fn coverage(&self) -> usize {
        let mut seen = vec![false; self.num_classes];
        for &y in &self.labels {
            seen[y] = true;
        }
        seen.into_iter().filter(|s| *s).count()
    }
}

/// `f_V(S) = (|S|/n) <(X_S^T X_S)^{-1}, X^T X>`, counting repeated indices.
pub fn v_objective(pool: &DesignPool, s: &Selection) -> Result<f64> {
    let gram = pool.selection_gram(s);
    let eig = gram.eigen()?;
    eig.ensure_nonsingular("; the selected points do not span the feature space")?;
    let inv = eig.map(|v| 1.0 / v);
    Ok(s.len() as f64 / pool.n() as f64 * inv.inner(&pool.gram()))
}

fn draw_label<R: Rng>(model: &LogisticModel, x: &DVector<f64>, rng: &mut R) -> usize {
    let p = model.probabilities(x);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, pj) in p.iter().enumerate() {
        acc += pj;
        if u < acc {
            return j;
        }
    }
    p.len() - 1
}

/// Draws `y ~ p(y | x_i, theta_star)` for each selected index.
pub fn sample_labels(pool: &DesignPool, indices: &[usize], theta_star: &LogisticModel, seed: RngSeed) -> Result<LabeledSet> {
    if theta_star.dim() != pool.d() {
        return Err(DesignError::arg("model and pool dimensions differ"));
    }
    let mut rng = seed.rng();
    let labels = indices.iter().map(|&i| draw_label(theta_star, &pool.row(i), &mut rng)).collect();
    LabeledSet::from_pool(pool, indices, labels, theta_star.num_classes)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub l2: f64,
    /// Weight class `j` by `k / (c_present * n_j)`.
    pub balanced: bool,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl FitOptions {
    pub fn new(l2: f64) -> Self {
        FitOptions {
            l2,
            balanced: false,
            max_iters: 1000,
            grad_tol: 1e-7,
        }
    }

    /// `l2 = 1/k`, the default strength for a training set of size `k`.
    pub fn default_for(k: usize) -> Self {
        Self::new(1.0 / k.max(1) as f64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

/// Mean (optionally class-weighted) negative log-likelihood plus
/// `(l2/2) ||theta||_F^2`, and its gradient.
pub fn logistic_objective(data: &LabeledSet, theta: &DMatrix<f64>, opts: &FitOptions) -> (f64, DMatrix<f64>) {
    let (k, c) = (data.len(), data.num_classes);
    let weights = sample_weights(data, opts.balanced);
    let z = &data.features * theta.transpose();
    let mut resid = DMatrix::zeros(k, c - 1);
    let mut loss = 0.0;
    for i in 0..k {
        let mut row: Vec<f64> = z.row(i).iter().copied().collect();
        row.push(0.0);
        log_softmax(&mut row);
        let y = data.labels[i];
        loss -= weights[i] * row[y];
        for j in 0..c - 1 {
            resid[(i, j)] = weights[i] * (row[j].exp() - if j == y { 1.0 } else { 0.0 });
        }
    }
    let kf = k as f64;
    let grad = resid.transpose() * &data.features / kf + theta * opts.l2;
    (loss / kf + 0.5 * opts.l2 * theta.norm_squared(), grad)
}

fn sample_weights(data: &LabeledSet, balanced: bool) -> Vec<f64> {
    if !balanced {
        return vec![1.0; data.len()];
    }
    let mut counts = vec![0usize; data.num_classes];
    for &y in &data.labels {
        counts[y] += 1;
    }
    let present = counts.iter().filter(|&&n| n > 0).count() as f64;
    let k = data.len() as f64;
    data.labels.iter().map(|&y| k / (present * counts[y] as f64)).collect()
}

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C: f64 = 1e-4;

/// L-BFGS with backtracking Armijo line search from `theta = 0`, no intercept.
pub fn fit_logistic(data: &LabeledSet, opts: &FitOptions) -> Result<(LogisticModel, FitReport)> {
    if !(opts.l2 >= 0.0) || !opts.l2.is_finite() {
        return Err(DesignError::arg("l2 strength must be nonnegative and finite"));
    }
    let (c, d) = (data.num_classes, data.features.ncols());
    let mut theta = DMatrix::zeros(c - 1, d);
    let (mut f, mut g) = logistic_objective(data, &theta, opts);
    if !f.is_finite() {
        return Err(DesignError::Data("logistic loss is not finite".into()));
    }
    let mut hist: Vec<(DMatrix<f64>, DMatrix<f64>, f64)> = Vec::new();
    let mut trace = vec![f];
    let mut iterations = 0;
    while iterations < opts.max_iters && g.norm() > opts.grad_tol {
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * s.dot(&q);
            q -= y * a;
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.last() {
            q *= s.dot(y) / y.norm_squared();
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * y.dot(&q);
            q += s * (a - b);
        }
        let mut dir = -q;
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            hist.clear();
            dir = -g.clone();
            slope = -g.norm_squared();
        }
        let mut step = 1.0;
        let accepted = loop {
            let cand = &theta + &dir * step;
            let (fc, gc) = logistic_objective(data, &cand, opts);
            if fc.is_finite() && fc <= f + ARMIJO_C * step * slope {
                break Some((cand, fc, gc));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((cand, fc, gc)) = accepted else { break };
        let s = &cand - &theta;
        let y = &gc - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if hist.len() == LBFGS_MEMORY {
                hist.remove(0);
            }
            hist.push((s, y, 1.0 / sy));
        }
        theta = cand;
        f = fc;
        g = gc;
        trace.push(f);
        iterations += 1;
    }
    let grad_norm = g.norm();
    Ok((
        LogisticModel::new(theta, c)?,
        FitReport {
            iterations,
            grad_norm,
            converged: grad_norm <= opts.grad_tol,
            objective_trace: trace,
        },
    ))
}

/// `(1/n) sum_x sum_y p(y|x, theta_star) [-log p(y|x, theta)]`, exactly.
pub fn expected_loss(pool: &DesignPool, theta: &LogisticModel, theta_star: &LogisticModel) -> Result<f64> {
    if theta.num_classes != theta_star.num_classes || theta.dim() != pool.d() || theta_star.dim() != pool.d() {
        return Err(DesignError::arg("models and pool disagree in shape"));
    }
    let total: f64 = (0..pool.n())
        .map(|i| {
            let x = pool.row(i);
            let ls = theta_star.log_probabilities(&x);
            let lt = theta.log_probabilities(&x);
            ls.iter().zip(&lt).map(|(s, t)| -s.exp() * t).sum::<f64>()
        })
        .sum();
    Ok(total / pool.n() as f64)
}

/// `L(theta) - L(theta_star)` on the pool.
pub fn excess_risk(pool: &DesignPool, theta: &LogisticModel, theta_star: &LogisticModel) -> Result<f64> {
    Ok(expected_loss(pool, theta, theta_star)? - expected_loss(pool, theta_star, theta_star)?)
}

/// Pearson correlation; `None` when undefined.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Average ranks (1-based), ties sharing their mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = r;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub budgets: Vec<usize>,
    pub subsets_per_budget: usize,
    pub label_redraws: usize,
    pub l2: f64,
    /// Subsets are drawn with weights `exp(-beta (u^T x)^2 / 2)` for a random
    /// unit `u`, `beta` spread evenly over `[0, tilt_max]`; `0` gives plain
    /// uniform subsets.
    pub tilt_max: f64,
    pub seed: RngSeed,
}

impl StudyConfig {
    pub fn new(budgets: Vec<usize>, subsets_per_budget: usize, seed: RngSeed) -> Self {
        StudyConfig {
            budgets,
            subsets_per_budget,
            label_redraws: 20,
            l2: 1e-6,
            tilt_max: 20.0,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub budget: usize,
    pub subset: usize,
    pub tilt: f64,
    pub f_v: f64,
    pub f_v_over_k: f64,
    pub mean_excess_risk: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyReport {
    pub records: Vec<StudyRecord>,
    pub skipped_singular: usize,
    pub spearman: Option<f64>,
    pub pearson: Option<f64>,
}

/// A subset of size `k`, tilted away from direction `u` with strength `beta`.
fn tilted_subset<R: Rng>(pool: &DesignPool, k: usize, beta: f64, rng: &mut R) -> Result<Vec<usize>> {
    let d = pool.d();
    let mut u = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    u /= u.norm();
    let proj = pool.features() * &u;
    let w: Vec<f64> = proj.iter().map(|t| (-0.5 * beta * t * t).exp().max(1e-300)).collect();
    let mut idx = rand::seq::index::sample_weighted(rng, pool.n(), |i| w[i], k)
        .map_err(|e| DesignError::arg(format!("subset sampling: {e}")))?
        .into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// For each random subset: `f_V`, and the mean excess risk of the ERM over
/// label redraws. Correlations are of mean excess risk against `f_V / k`.
pub fn risk_correlation_study(pool: &DesignPool, theta_star: &LogisticModel, cfg: &StudyConfig) -> Result<StudyReport> {
    if cfg.budgets.is_empty() || cfg.subsets_per_budget == 0 || cfg.label_redraws == 0 {
        return Err(DesignError::arg("study needs budgets, subsets and label redraws"));
    }
    if let Some(&k) = cfg.budgets.iter().find(|&&k| k == 0 || k > pool.n()) {
        return Err(DesignError::arg(format!("budget {k} is not in [1, {}]", pool.n())));
    }
    let base = expected_loss(pool, theta_star, theta_star)?;
    let m = cfg.subsets_per_budget;
    let cells: Vec<(usize, usize)> = cfg.budgets.iter().flat_map(|&k| (0..m).map(move |s| (k, s))).collect();
    let outcomes: Vec<Result<Option<StudyRecord>>> = cells
        .par_iter()
        .map(|&(k, s)| {
            let mut rng = cfg.seed.derive(&[k as u64, s as u64]).rng();
            // A single subset exists when k = n; tilting is moot.
            let tilt = if m > 1 && k < pool.n() { cfg.tilt_max * s as f64 / (m - 1) as f64 } else { 0.0 };
            let idx = if k == pool.n() { (0..k).collect() } else { tilted_subset(pool, k, tilt, &mut rng)? };
            let sel = Selection::new(idx.clone(), pool.n(), false)?;
            let f_v = match v_objective(pool, &sel) {
                Ok(v) => v,
                Err(DesignError::Singular { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let mut total = 0.0;
            for r in 0..cfg.label_redraws {
                let data = sample_labels(pool, &idx, theta_star, cfg.seed.derive(&[k as u64, s as u64, r as u64 + 1]))?;
                let (model, _) = fit_logistic(&data, &FitOptions::new(cfg.l2))?;
                total += expected_loss(pool, &model, theta_star)? - base;
            }
            Ok(Some(StudyRecord {
                budget: k,
                subset: s,
                tilt,
                f_v,
                f_v_over_k: f_v / k as f64,
                mean_excess_risk: total / cfg.label_redraws as f64,
            }))
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = 0;
    for o in outcomes {
        match o? {
            Some(r) => records.push(r),
            None => skipped += 1,
        }
    }
    let xs: Vec<f64> = records.iter().map(|r| r.f_v_over_k).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.mean_excess_risk).collect();
    Ok(StudyReport {
        spearman: spearman(&xs, &ys),
        pearson: pearson(&xs, &ys),
        records,
        skipped_singular: skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    pub classes_covered: usize,
    pub num_classes: usize,
}

/// Fits on the selected points and scores predictions over the whole pool.
///
/// Only classes present in the selection can be predicted; a selection
/// covering one class predicts it everywhere.
pub fn evaluate_selection_accuracy(pool: &DesignPool, indices: &[usize], labels_full: &[usize], num_classes: usize, opts: &FitOptions) -> Result<AccuracyReport> {
    if labels_full.len() != pool.n() {
        return Err(DesignError::Data(format!("{} labels for a pool of {}", labels_full.len(), pool.n())));
    }
    if indices.is_empty() {
        return Err(DesignError::arg("empty selection"));
    }
    if let Some(bad) = labels_full.iter().find(|&&y| y >= num_classes) {
        return Err(DesignError::Data(format!("label {bad} out of range for {num_classes} classes")));
    }
    let mut present: Vec<usize> = indices.iter().map(|&i| labels_full[i]).collect();
    present.sort_unstable();
    present.dedup();
    let covered = present.len();
    let predict: Box<dyn Fn(&DVector<f64>) -> usize> = if covered == 1 {
        let only = present[0];
        Box::new(move |_| only)
    } else {
        let local: Vec<usize> = indices.iter().map(|&i| present.binary_search(&labels_full[i]).expect("present")).collect();
        let data = LabeledSet::from_pool(pool, indices, local, covered)?;
        let (model, _) = fit_logistic(&data, opts)?;
        let present = present.clone();
        Box::new(move |x| present[model.predict(x)])
    };
    let hits = (0..pool.n()).filter(|&i| predict(&pool.row(i)) == labels_full[i]).count();
    Ok(AccuracyReport {
        accuracy: hits as f64 / pool.n() as f64,
        classes_covered: covered,
        num_classes,
    })
}

/// `X_S^T X_S` of a labeled set, for diagnostics.
pub fn labeled_gram(data: &LabeledSet) -> SpdMatrix {
    SpdMatrix::from_symmetrized(data.features.tr_mul(&data.features))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(n: usize, d: usize, seed: u64) -> DesignPool {
        let mut rng = RngSeed(seed).rng();
        DesignPool::new(DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))).unwrap()
    }

    #[test]
    fn v_objective_examples() {
        let eye = DesignPool::new(DMatrix::identity(2, 2)).unwrap();
        let all = Selection::new(vec![0, 1], 2, false).unwrap();
        assert!((v_objective(&eye, &all).unwrap() - 2.0).abs() < 1e-15);

        let dup = DesignPool::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = Selection::new(vec![0, 1], 4, false).unwrap();
        assert!((v_objective(&dup, &s).unwrap() - 2.0).abs() < 1e-15);

        let pool = gaussian(30, 4, 1);
        let s = Selection::new(vec![0, 3, 5, 7, 11, 20], 30, false).unwrap();
        let xs = pool.rows_of(s.indices());
        let inv = (xs.transpose() * &xs).try_inverse().unwrap();
        let xtx = pool.features().transpose() * pool.features();
        let direct = 6.0 / 30.0 * (inv * xtx).trace();
        assert!((v_objective(&pool, &s).unwrap() - direct).abs() < 1e-10 * direct);
        let full = Selection::new((0..30).collect(), 30, false).unwrap();
        assert!((v_objective(&pool, &full).unwrap() - 4.0).abs() < 1e-12);

        let flat = DesignPool::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = Selection::new(vec![0, 1], 3, false).unwrap();
        assert!(matches!(v_objective(&flat, &s), Err(DesignError::Singular { .. })));
    }

    #[test]
    fn softmax_normalizes() {
        let mut rng = RngSeed(2).rng();
        for c in 2..6 {
            let m = LogisticModel::random(c, 5, RngSeed(c as u64)).unwrap();
            for _ in 0..20 {
                let x = DVector::from_fn(5, |_, _| 10.0 * rng.sample::<f64, _>(StandardNormal));
                let s: f64 = m.probabilities(&x).iter().sum();
                assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn label_sampling() {
        let pool = DesignPool::from_rows(&[vec![1.0, -2.0]]).unwrap();
        let zero = LogisticModel::zeros(3, 2).unwrap();
        let idx = vec![0usize; 100_000];
        let data = sample_labels(&pool, &idx, &zero, RngSeed(4)).unwrap();
        let mut counts = [0usize; 3];
        for &y in &data.labels {
            counts[y] += 1;
        }
        let (mean, sd) = (100_000.0 / 3.0, (100_000.0_f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt());
        for c in counts {
            assert!((c as f64 - mean).abs() <= 4.0 * sd, "{counts:?}");
        }

        let sharp = LogisticModel::new(DMatrix::from_row_slice(1, 2, &[50.0, -50.0]), 2).unwrap();
        let d = sample_labels(&pool, &[0; 50], &sharp, RngSeed(1)).unwrap();
        assert!(d.labels.iter().all(|&y| y == 0));

        let m = LogisticModel::random(4, 3, RngSeed(7)).unwrap();
        let p = gaussian(20, 3, 3);
        let a = sample_labels(&p, &(0..20).collect::<Vec<_>>(), &m, RngSeed(9)).unwrap();
        let b = sample_labels(&p, &(0..20).collect::<Vec<_>>(), &m, RngSeed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pool = gaussian(25, 3, 5);
        let model = LogisticModel::random(4, 3, RngSeed(1)).unwrap();
        let data = sample_labels(&pool, &(0..25).collect::<Vec<_>>(), &model, RngSeed(2)).unwrap();
        for balanced in [false, true] {
            let opts = FitOptions { balanced, ..FitOptions::new(0.3) };
            let theta = DMatrix::from_fn(3, 3, |i, j| 0.1 * (i as f64 - j as f64));
            let (_, g) = logistic_objective(&data, &theta, &opts);
            let h = 1e-6;
            let mut fd = DMatrix::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    let mut p = theta.clone();
                    p[(i, j)] += h;
                    let mut m = theta.clone();
                    m[(i, j)] -= h;
                    fd[(i, j)] = (logistic_objective(&data, &p, &opts).0 - logistic_objective(&data, &m, &opts).0) / (2.0 * h);
                }
            }
            assert!((&fd - &g).norm() <= 1e-5 * g.norm());
        }
    }

    #[test]
    fn fit_examples() {
        let one = LabeledSet::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.5]), vec![0], 2).unwrap();
        let (m, rep) = fit_logistic(&one, &FitOptions::new(0.1)).unwrap();
        assert!(rep.converged && rep.grad_norm <= 1e-7);
        assert!(m.theta.iter().all(|v| v.is_finite()));

        let sep = LabeledSet::new(DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 1.0, -1.0, -1.0, -2.0, -0.5]), vec![0, 0, 1, 1], 2).unwrap();
        let opts = FitOptions::new(0.5);
        let (m, rep) = fit_logistic(&sep, &opts).unwrap();
        let (loss, _) = logistic_objective(&sep, &m.theta, &FitOptions::new(0.0));
        assert!(loss < std::f64::consts::LN_2);
        for w in rep.objective_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn fit_recovers_parameter_on_large_sample() {
        let pool = gaussian(4000, 3, 8);
        let star = LogisticModel::random(3, 3, RngSeed(3)).unwrap();
        let data = sample_labels(&pool, &(0..4000).collect::<Vec<_>>(), &star, RngSeed(4)).unwrap();
        let (m, rep) = fit_logistic(&data, &FitOptions::new(1e-6)).unwrap();
        assert!(rep.converged, "{}", rep.grad_norm);
        assert!((&m.theta - &star.theta).norm() < 0.2 * star.theta.norm().max(1.0));
        let ex = excess_risk(&pool, &m, &star).unwrap();
        assert!(ex >= -1e-9 && ex < 0.01);
    }

    #[test]
    fn expected_loss_examples() {
        let pool = gaussian(40, 3, 6);
        let star = LogisticModel::random(3, 3, RngSeed(1)).unwrap();
        assert_eq!(excess_risk(&pool, &star, &star).unwrap(), 0.0);
        for c in 2..5 {
            let z = LogisticModel::zeros(c, 3).unwrap();
            assert!((expected_loss(&pool, &z, &z).unwrap() - (c as f64).ln()).abs() < 1e-14);
        }
        for s in 0..20 {
            let other = LogisticModel::random(3, 3, RngSeed(100 + s)).unwrap();
            assert!(excess_risk(&pool, &other, &star).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn rank_correlations() {
        assert_eq!(ranks(&[3.0, 1.0, 2.0, 1.0]), vec![4.0, 1.5, 3.0, 1.5]);
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[1.0, 4.0, 9.0, 16.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[2.0, 4.0, 6.0, 8.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0], &[2.0]), None);
        assert_eq!(pearson(&[1.0, 1.0], &[2.0, 3.0]), None);
    }

    #[test]
    fn study_edge_cases_and_budget_effect() {
        let pool = gaussian(60, 3, 2);
        let star = LogisticModel::random(2, 3, RngSeed(5)).unwrap();
        let mut cfg = StudyConfig::new(vec![60], 3, RngSeed(1));
        cfg.label_redraws = 3;
        let rep = risk_correlation_study(&pool, &star, &cfg).unwrap();
        assert_eq!(rep.records.len(), 3);
        assert!(rep.records.windows(2).all(|w| w[0].f_v == w[1].f_v));
        assert_eq!(rep.spearman, None);

        let pool = gaussian(2000, 4, 3);
        let star = LogisticModel::random(2, 4, RngSeed(6)).unwrap();
        let mut cfg = StudyConfig::new(vec![100, 200], 6, RngSeed(2));
        cfg.tilt_max = 0.0;
        cfg.label_redraws = 10;
        let rep = risk_correlation_study(&pool, &star, &cfg).unwrap();
        let mean = |k: usize| {
            let v: Vec<f64> = rep.records.iter().filter(|r| r.budget == k).map(|r| r.mean_excess_risk).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(200) < mean(100));
        assert!(rep.records.iter().all(|r| r.mean_excess_risk >= -1e-9));

        assert!(risk_correlation_study(&pool, &star, &StudyConfig::new(vec![5000], 2, RngSeed(0))).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let mut rng = RngSeed(11).rng();
        let centers = [[8.0, 0.0], [-8.0, 0.0], [0.0, 8.0]];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, ctr) in centers.iter().enumerate() {
            for _ in 0..50 {
                rows.push(vec![ctr[0] + rng.sample::<f64, _>(StandardNormal), ctr[1] + rng.sample::<f64, _>(StandardNormal)]);
                labels.push(c);
            }
        }
        let pool = DesignPool::from_rows(&rows).unwrap();
        let rep = evaluate_selection_accuracy(&pool, &[0, 50, 100], &labels, 3, &FitOptions::default_for(3)).unwrap();
        assert!(rep.accuracy >= 0.95, "{}", rep.accuracy);
        assert_eq!(rep.classes_covered, 3);

        let rep = evaluate_selection_accuracy(&pool, &[0, 50], &labels, 3, &FitOptions::default_for(2)).unwrap();
        assert_eq!(rep.classes_covered, 2);

        let constant = vec![2usize; 150];
        for sel in [vec![0usize], vec![3, 77, 140]] {
            let rep = evaluate_selection_accuracy(&pool, &sel, &constant, 3, &FitOptions::default_for(sel.len())).unwrap();
            assert_eq!(rep.accuracy, 1.0);
        }
    }

    #[test]
    fn balanced_weights_equalize_classes() {
        let data = LabeledSet::new(DMatrix::zeros(4, 1), vec![0, 0, 0, 1], 3).unwrap();
        let w = sample_weights(&data, true);
        let per_class0: f64 = w[..3].iter().sum();
        assert!((per_class0 - w[3]).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-15);
    }
}
