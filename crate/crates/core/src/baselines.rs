//! Comparison selectors: random and weight-based sampling, greedy A-optimal
//! removal, MMD-critic prototypes, k-means representatives and pivoted QR.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::linalg::SpdMatrix;
use crate::pool::{DesignPool, Selection};
use crate::rng::RngSeed;

fn check_budget(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(DesignError::arg("budget k must be at least 1"));
    }
    if k > n {
        return Err(DesignError::arg(format!("cannot select {k} distinct points from a pool of {n}")));
    }
    Ok(())
}

/// `k` distinct indices drawn uniformly, returned in ascending order.
pub fn select_uniform(n: usize, k: usize, seed: RngSeed) -> Result<Selection> {
    check_budget(k, n)?;
    let mut idx = index::sample(&mut seed.rng(), n, k).into_vec();
    idx.sort_unstable();
    Selection::new(idx, n, false)
}

/// Indices of the `k` largest weights, ties to the lower index.
pub fn select_max_weights(pi: &[f64], k: usize) -> Result<Selection> {
    check_budget(k, pi.len())?;
    let mut order: Vec<usize> = (0..pi.len()).collect();
    // Stable sort keeps equal weights in index order.
    order.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]));
    order.truncate(k);
    Selection::new(order, pi.len(), false)
}

/// `k` draws from `pi / sum(pi)`: i.i.d. with replacement, or successive
/// draws without replacement when `distinct`.
pub fn select_weighted_sampling(pi: &[f64], k: usize, seed: RngSeed, distinct: bool) -> Result<Selection> {
    let n = pi.len();
    if k == 0 {
        return Err(DesignError::arg("budget k must be at least 1"));
    }
    let mut rng = seed.rng();
    if distinct {
        check_budget(k, n)?;
        let positive = pi.iter().filter(|w| **w > 0.0).count();
        if positive < k {
            return Err(DesignError::arg(format!(
                "only {positive} points have positive weight; cannot draw {k} distinct"
            )));
        }
        let idx = index::sample_weighted(&mut rng, n, |i| pi[i].max(0.0), k)
            .map_err(|e| DesignError::arg(format!("weighted sampling without replacement: {e}")))?
            .into_vec();
        Selection::new(idx, n, false)
    } else {
        let dist = WeightedIndex::new(pi).map_err(|e| DesignError::arg(format!("invalid sampling weights: {e}")))?;
        let idx = (0..k).map(|_| dist.sample(&mut rng)).collect();
        Selection::new(idx, n, true)
    }
}

/// One removal of the greedy A-optimal method.
#[derive(Clone, Debug, Serialize)]
pub struct GreedyStep {
    pub removed: usize,
    /// `Tr((M - x x^T)^{-1})` predicted by the rank-one downdate.
    pub predicted_trace: f64,
    /// `lambda_min` of the information matrix after the removal.
    pub lambda_min: f64,
    pub skipped: usize,
}

const DOWNDATE_FLOOR: f64 = 1e-10;

/// Starts from `max(initial_factor * d, k)` random points (capped at `n`) and
/// repeatedly drops the point whose removal least increases `Tr(M^{-1})`.
pub fn select_greedy_a_removal(pool: &DesignPool, k: usize, initial_factor: usize, seed: RngSeed) -> Result<(Selection, Vec<GreedyStep>)> {
    let (n, d) = (pool.n(), pool.d());
    check_budget(k, n)?;
    let m0 = (initial_factor * d).max(k).min(n);
    let mut current = index::sample(&mut seed.rng(), n, m0).into_vec();
    current.sort_unstable();

    let x = pool.features();
    let mut steps = Vec::with_capacity(m0 - k);
    while current.len() > k {
        let xs = pool.rows_of(&current);
        let m = xs.tr_mul(&xs);
        let m_inv = m.clone().cholesky().map(|c| c.inverse()).ok_or_else(|| {
            DesignError::Degenerate(format!("greedy removal: information matrix of {} points is singular", current.len()))
        })?;
        let base = m_inv.trace();
        let u = &xs * &m_inv;
        let mut best: Option<(usize, f64)> = None;
        let mut skipped = 0;
        for pos in 0..current.len() {
            let den = 1.0 - u.row(pos).dot(&xs.row(pos));
            if den <= DOWNDATE_FLOOR {
                skipped += 1;
                continue;
            }
            let cost = base + u.row(pos).norm_squared() / den;
            if best.is_none_or(|(_, b)| cost < b) {
                best = Some((pos, cost));
            }
        }
        let Some((pos, cost)) = best else {
            return Err(DesignError::Degenerate(format!(
                "greedy removal: every candidate among {} points would make the design singular",
                current.len()
            )));
        };
        let removed = current.remove(pos);
        let xr = x.row(removed).transpose();
        let after = SpdMatrix::from_symmetrized(m - &xr * xr.transpose());
        steps.push(GreedyStep {
            removed,
            predicted_trace: cost,
            lambda_min: after.eigen()?.lambda_min(),
            skipped,
        });
    }
    Ok((Selection::new(current, n, false)?, steps))
}

/// Dense RBF kernel `exp(-||x_i - x_j||^2 / (2 gamma^2))`.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub entries: DMatrix<f64>,
    pub gamma: f64,
}

/// Largest pool the dense kernel is built for unless explicitly allowed.
pub const MMD_MAX_POINTS: usize = 20_000;

fn pairwise_sq_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (x.row(i) - x.row(j)).norm_squared();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Median of all `n(n-1)/2` pairwise distances (mean of the two middle
/// values for an even count).
pub fn median_pairwise_distance(pool: &DesignPool) -> Result<f64> {
    median_from_sq(&pairwise_sq_distances(pool.features()))
}

fn median_from_sq(sq: &DMatrix<f64>) -> Result<f64> {
    let n = sq.nrows();
    if n < 2 {
        return Err(DesignError::arg("median distance needs at least two points"));
    }
    let mut v: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for j in 0..n {
        for i in 0..j {
            v.push(sq[(i, j)].sqrt());
        }
    }
    let m = v.len();
    let (_, hi, _) = v.select_nth_unstable_by(m / 2, f64::total_cmp);
    let hi = *hi;
    if m % 2 == 1 {
        return Ok(hi);
    }
    let lo = v[..m / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(0.5 * (lo + hi))
}

impl KernelMatrix {
    /// RBF kernel with bandwidth `gamma`, or the median pairwise distance.
    pub fn rbf(pool: &DesignPool, gamma: Option<f64>) -> Result<Self> {
        let sq = pairwise_sq_distances(pool.features());
        let gamma = match gamma {
            Some(g) if g > 0.0 && g.is_finite() => g,
            Some(g) => return Err(DesignError::arg(format!("kernel bandwidth must be positive, got {g}"))),
            None if pool.n() == 1 => 1.0,
            None => median_from_sq(&sq)?,
        };
        if gamma <= 0.0 {
            return Err(DesignError::Degenerate(
                "median pairwise distance is zero; pass an explicit kernel bandwidth".into(),
            ));
        }
        let s = -0.5 / (gamma * gamma);
        Ok(KernelMatrix {
            entries: sq.map(|v| (s * v).exp()),
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// `J(S) = 2/(n|S|) sum_{i in [n], j in S} k(i,j) - 1/|S|^2 sum_{i,j in S} k(i,j)`.
pub fn mmd_objective(kernel: &KernelMatrix, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(DesignError::arg("MMD objective of an empty set"));
    }
    let n = kernel.n() as f64;
    let s = indices.len() as f64;
    let k = &kernel.entries;
    let cross: f64 = indices.iter().map(|&j| k.column(j).sum()).sum();
    let inner: f64 = indices.iter().map(|&i| indices.iter().map(|&j| k[(i, j)]).sum::<f64>()).sum();
    Ok(2.0 * cross / (n * s) - inner / (s * s))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmdOptions {
    pub gamma: Option<f64>,
    /// Permit pools larger than [`MMD_MAX_POINTS`].
    pub allow_large: bool,
}

impl Default for MmdOptions {
    fn default() -> Self {
        MmdOptions { gamma: None, allow_large: false }
    }
}

/// Greedy MMD-critic prototypes; also returns the per-step increments of `J`.
pub fn select_mmd_critic(pool: &DesignPool, k: usize, opts: &MmdOptions) -> Result<(Selection, Vec<f64>)> {
    let n = pool.n();
    check_budget(k, n)?;
    if n > MMD_MAX_POINTS && !opts.allow_large {
        return Err(DesignError::arg(format!(
            "MMD-critic on {n} points needs an {n}x{n} kernel; subsample or allow large pools explicitly"
        )));
    }
    let kernel = KernelMatrix::rbf(pool, opts.gamma)?;
    Ok(mmd_greedy(&kernel, k))
}

pub(crate) fn mmd_greedy(kernel: &KernelMatrix, k: usize) -> (Selection, Vec<f64>) {
    let n = kernel.n();
    let nf = n as f64;
    let km = &kernel.entries;
    let colsum: Vec<f64> = (0..n).map(|j| km.column(j).sum()).collect();
    let mut in_set = vec![false; n];
    let mut row_to_set = vec![0.0; n];
    let (mut cross, mut inner, mut j_cur) = (0.0, 0.0, 0.0);
    let mut chosen = Vec::with_capacity(k);
    let mut increments = Vec::with_capacity(k);
    for step in 0..k {
        let s = (step + 1) as f64;
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for i in 0..n {
            if in_set[i] {
                continue;
            }
            let c = cross + colsum[i];
            let b = inner + 2.0 * row_to_set[i] + km[(i, i)];
            let val = 2.0 * c / (nf * s) - b / (s * s);
            if best.is_none_or(|(_, v, _, _)| val > v) {
                best = Some((i, val, c, b));
            }
        }
        let (i, val, c, b) = best.expect("k <= n leaves a candidate");
        increments.push(val - j_cur);
        j_cur = val;
        cross = c;
        inner = b;
        in_set[i] = true;
        for (r, acc) in row_to_set.iter_mut().enumerate() {
            *acc += km[(r, i)];
        }
        chosen.push(i);
    }
    (Selection::new(chosen, n, false).expect("distinct by construction"), increments)
}

/// k-means++ seeding, Lloyd iterations, then the member nearest each
/// centroid. Also returns the within-cluster SSE after each update.
pub fn select_kmeans(pool: &DesignPool, k: usize, seed: RngSeed, max_iters: usize) -> Result<(Selection, Vec<f64>)> {
    let n = pool.n();
    check_budget(k, n)?;
    let x = pool.features();
    let rows: Vec<DVector<f64>> = (0..n).map(|i| pool.row(i)).collect();
    let mut rng = seed.rng();

    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    let first = rng.random_range(0..n);
    used[first] = true;
    centers.push(rows[first].clone());
    let mut d2: Vec<f64> = rows.iter().map(|r| (r - &centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(&mut rng),
            // Remaining points coincide with existing centers.
            Err(_) => (0..n).find(|&i| !used[i]).expect("k <= n"),
        };
        used[next] = true;
        centers.push(rows[next].clone());
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min((r - &rows[next]).norm_squared());
        }
    }

    let nearest = |centers: &[DVector<f64>], r: &DVector<f64>| -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in centers.iter().enumerate() {
            let v = (r - c).norm_squared();
            if v < best.1 {
                best = (j, v);
            }
        }
        best
    };

    let mut assign = vec![usize::MAX; n];
    let mut sse_trace = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        let mut cost = vec![0.0; n];
        for (i, r) in rows.iter().enumerate() {
            let (j, v) = nearest(&centers, r);
            changed |= assign[i] != j;
            assign[i] = j;
            cost[i] = v;
        }
        // Re-seed empty clusters with the currently worst-served point.
        let mut sizes = vec![0usize; k];
        for &a in &assign {
            sizes[a] += 1;
        }
        for j in 0..k {
            if sizes[j] == 0 {
                let far = (0..n)
                    .filter(|&i| sizes[assign[i]] > 1)
                    .max_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(b.cmp(&a)))
                    .expect("k <= n leaves a shared cluster");
                sizes[assign[far]] -= 1;
                assign[far] = j;
                sizes[j] = 1;
                cost[far] = 0.0;
                changed = true;
            }
        }
        for (j, c) in centers.iter_mut().enumerate() {
            let mut sum = DVector::zeros(x.ncols());
            for i in (0..n).filter(|&i| assign[i] == j) {
                sum += &rows[i];
            }
            *c = sum / sizes[j] as f64;
        }
        let sse: f64 = (0..n).map(|i| (&rows[i] - &centers[assign[i]]).norm_squared()).sum();
        sse_trace.push(sse);
        if !changed {
            break;
        }
    }

    let mut picks = Vec::with_capacity(k);
    for (j, c) in centers.iter().enumerate() {
        let rep = (0..n)
            .filter(|&i| assign[i] == j)
            .min_by(|&a, &b| (&rows[a] - c).norm_squared().total_cmp(&(&rows[b] - c).norm_squared()).then(a.cmp(&b)))
            .expect("clusters are nonempty after re-seeding");
        picks.push(rep);
    }
    Ok((Selection::new(picks, n, false)?, sse_trace))
}

/// First `k` pivots of Businger-Golub column-pivoted QR on `X^T`.
pub fn select_pivoted_qr(pool: &DesignPool, k: usize) -> Result<Selection> {
    let n = pool.n();
    check_budget(k, n)?;
    // Columns are points.
    let mut r = pool.features().transpose();
    let scale = (0..n).map(|j| r.column(j).norm()).fold(0.0, f64::max);
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for j in (0..n).filter(|&j| !chosen[j]) {
            let v = r.column(j).norm_squared();
            if v > best.1 {
                best = (j, v);
            }
        }
        let p = best.0;
        chosen[p] = true;
        picks.push(p);
        let norm = best.1.sqrt();
        if norm <= 1e-12 * scale {
            continue;
        }
        let q = r.column(p) / norm;
        // Two passes of Gram-Schmidt keep the residuals orthogonal.
        for _ in 0..2 {
            for j in (0..n).filter(|&j| !chosen[j]) {
                let c = q.dot(&r.column(j));
                r.column_mut(j).axpy(-c, &q, 1.0);
            }
        }
    }
    Selection::new(picks, n, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineMethod {
    Uniform,
    MaxWeights,
    Weighted,
    GreedyA,
    Mmd,
    Kmeans,
    Rrqr,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 7] = [
        Self::Uniform,
        Self::MaxWeights,
        Self::Weighted,
        Self::GreedyA,
        Self::Mmd,
        Self::Kmeans,
        Self::Rrqr,
    ];

    pub fn needs_relaxed(self) -> bool {
        matches!(self, Self::MaxWeights | Self::Weighted)
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Self::Uniform | Self::Weighted | Self::GreedyA | Self::Kmeans)
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::MaxWeights => "max-weights",
            Self::Weighted => "weighted",
            Self::GreedyA => "greedy-a",
            Self::Mmd => "mmd",
            Self::Kmeans => "kmeans",
            Self::Rrqr => "rrqr",
        })
    }
}

impl FromStr for BaselineMethod {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|m| m.to_string() == key)
            .ok_or_else(|| DesignError::arg(format!("unknown baseline method '{s}'")))
    }
}

/// Per-method knobs for [`run_baseline`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub greedy_initial_factor: usize,
    pub kernel_gamma: Option<f64>,
    pub allow_large_kernel: bool,
    pub kmeans_max_iters: usize,
    pub weighted_distinct: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            greedy_initial_factor: 10,
            kernel_gamma: None,
            allow_large_kernel: false,
            kmeans_max_iters: 300,
            weighted_distinct: false,
        }
    }
}

/// Dispatches one baseline run. `pi` is required for weight-based methods.
pub fn run_baseline(method: BaselineMethod, pool: &DesignPool, pi: Option<&[f64]>, k: usize, seed: RngSeed, cfg: &BaselineConfig) -> Result<Selection> {
    let need_pi = || pi.ok_or_else(|| DesignError::arg(format!("{method} needs the relaxed weights")));
    match method {
        BaselineMethod::Uniform => select_uniform(pool.n(), k, seed),
        BaselineMethod::MaxWeights => select_max_weights(need_pi()?, k),
        BaselineMethod::Weighted => select_weighted_sampling(need_pi()?, k, seed, cfg.weighted_distinct),
        BaselineMethod::GreedyA => select_greedy_a_removal(pool, k, cfg.greedy_initial_factor, seed).map(|r| r.0),
        BaselineMethod::Mmd => select_mmd_critic(
            pool,
            k,
            &MmdOptions {
                gamma: cfg.kernel_gamma,
                allow_large: cfg.allow_large_kernel,
            },
        )
        .map(|r| r.0),
        BaselineMethod::Kmeans => select_kmeans(pool, k, seed, cfg.kmeans_max_iters).map(|r| r.0),
        BaselineMethod::Rrqr => select_pivoted_qr(pool, k),
    }
}
