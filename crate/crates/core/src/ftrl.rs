//! Rounding a relaxed design to `k` points with Follow-the-Regularized-Leader
//! over trace-one PSD matrices.
//!
//! The pool is whitened by the relaxed covariance `S = sum_i pi_i x_i x_i^T`
//! (`x~_i = S^{-1/2} x_i`), after which a design is good exactly when
//! `lambda_min(sum_{t} x~_{i_t} x~_{i_t}^T)` is large. Each round the FTRL
//! action `A_t` is formed from the accumulated losses and the point that
//! maximizes the entropy or l_{1/2} lower-bound increment is added.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::criteria::{argmax_lowest, relative_objective, Criterion, CriterionKind};
use crate::error::{DesignError, Result};
use crate::linalg::{regularized_covariance, row_quadratic_forms, spectral_apply, sym_eigen, EigenDecomposition, ScalarMap, SpdMatrix};
use crate::pool::{DesignPool, Selection};
use crate::relax::RelaxedSolution;
use crate::ridge::{ridge_b_matrix, BMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regularizer {
    /// `w(A) = <A, log A - I>`
    #[serde(rename = "entropy")]
    Entropy,
    /// `w(A) = -2 Tr(A^{1/2})`
    #[serde(rename = "l12")]
    LHalf,
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularizer::Entropy => "entropy",
            Regularizer::LHalf => "l12",
        })
    }
}

impl FromStr for Regularizer {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "entropy" => Ok(Regularizer::Entropy),
            "l12" | "l1/2" | "lhalf" => Ok(Regularizer::LHalf),
            other => Err(DesignError::arg(format!("unknown regularizer '{other}', expected entropy|l12"))),
        }
    }
}

/// The pool whitened by the relaxed covariance.
#[derive(Clone, Debug)]
pub struct WhitenedPool {
    pub sigma_diamond: SpdMatrix,
    pub sigma_inv_sqrt: SpdMatrix,
    pub sigma_inv: SpdMatrix,
    pub x_tilde: DMatrix<f64>,
    pub tilde_norms_sq: Vec<f64>,
    pub ridge_lambda: f64,
}

/// `S = sum_i pi_i x_i x_i^T + lambda I` and `x~_i = S^{-1/2} x_i`.
pub fn whiten(pool: &DesignPool, relaxed: &RelaxedSolution, ridge_lambda: f64) -> Result<WhitenedPool> {
    if !(ridge_lambda >= 0.0) {
        return Err(DesignError::arg("ridge lambda must be nonnegative"));
    }
    let sigma = regularized_covariance(pool, &relaxed.pi, ridge_lambda)?;
    let eig = sym_eigen(&sigma)?;
    eig.ensure_nonsingular("; the relaxed weights do not span the feature space")?;
    let sigma_inv_sqrt = spectral_apply(&eig, ScalarMap::InvSqrt)?;
    let sigma_inv = spectral_apply(&eig, ScalarMap::Inverse)?;
    let x_tilde = pool.features() * sigma_inv_sqrt.as_matrix();
    let tilde_norms_sq = x_tilde.row_iter().map(|r| r.norm_squared()).collect();
    Ok(WhitenedPool {
        sigma_diamond: sigma,
        sigma_inv_sqrt,
        sigma_inv,
        x_tilde,
        tilde_norms_sq,
        ridge_lambda,
    })
}

/// FTRL action matrix for an accumulated, already `alpha`-scaled loss `L`.
#[derive(Clone, Debug)]
pub struct FtrlAction {
    /// `A`, trace one.
    pub matrix: SpdMatrix,
    /// `A^{1/2}` (l_{1/2} only).
    pub sqrt: Option<SpdMatrix>,
    /// Normalizing constant `nu`.
    pub nu: f64,
    /// Residual `Tr(A) - 1` of the normalization equation.
    pub residual: f64,
    /// Residuals at the final bisection bracket `(lower, upper)` (l_{1/2} only).
    pub bracket_residuals: Option<(f64, f64)>,
    pub(crate) loss_eig: EigenDecomposition,
    /// Spectrum of `log A` (entropy) or `A^{-1/2}` (l_{1/2}) in the basis of `loss_eig`.
    pub(crate) generator: DVector<f64>,
}

impl FtrlAction {
    pub fn loss_eigen(&self) -> &EigenDecomposition {
        &self.loss_eig
    }

    /// `log A` for entropy, `A^{-1/2}` for l_{1/2}, recomposed from the exact spectrum.
    pub fn generator_matrix(&self) -> SpdMatrix {
        self.loss_eig.recompose(&self.generator)
    }
}

const BRACKET_EXPANSIONS: usize = 200;

/// Closed-form FTRL action for the loss `L = alpha * sum_s F_s`:
/// entropy gives `A = exp(-L - nu I)`, l_{1/2} gives `A = (L + nu I)^{-2}`,
/// with `nu` fixing `Tr(A) = 1`.
///
/// Both are evaluated in the shifted spectrum `mu_i = lambda_i - lambda_min`.
/// For l_{1/2} that turns the normalization into `sum_i (mu_i + s)^{-2} = 1`
/// for `s = nu + lambda_min`, whose root always lies in `[1, sqrt(d)]`.
pub fn ftrl_action(loss_sum: &SpdMatrix, reg: Regularizer) -> Result<FtrlAction> {
    let eig = sym_eigen(loss_sum)?;
    let lmin = eig.lambda_min();
    let mu = eig.eigenvalues.map(|l| l - lmin);
    let d = mu.len();
    match reg {
        Regularizer::Entropy => {
            let lse = mu.iter().map(|m| (-m).exp()).sum::<f64>().ln();
            let generator = mu.map(|m| -m - lse);
            let values = generator.map(f64::exp);
            let residual = values.sum() - 1.0;
            Ok(FtrlAction {
                matrix: eig.recompose(&values),
                sqrt: None,
                nu: -lmin + lse,
                residual,
                bracket_residuals: None,
                loss_eig: eig,
                generator,
            })
        }
        Regularizer::LHalf => {
            let g = |s: f64| mu.iter().map(|m| (m + s).powi(-2)).sum::<f64>() - 1.0;
            let mut lo = 1.0_f64;
            let mut hi = (d as f64).sqrt();
            let mut glo = g(lo);
            let mut ghi = g(hi);
            let mut expansions = 0;
            while ghi > 0.0 {
                if expansions == BRACKET_EXPANSIONS {
                    return Err(DesignError::Numeric(format!(
                        "l1/2 normalizer bracket [{lo}, {hi}] failed to change sign (residuals {glo:e}, {ghi:e})"
                    )));
                }
                lo = hi;
                glo = ghi;
                hi *= 2.0;
                ghi = g(hi);
                expansions += 1;
            }
            if glo < 0.0 {
                return Err(DesignError::Numeric(format!(
                    "l1/2 normalizer lower bracket {lo} has negative residual {glo:e}"
                )));
            }
            for _ in 0..2000 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    glo = 0.0;
                    ghi = 0.0;
                    break;
                }
                if gm > 0.0 {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                    ghi = gm;
                }
            }
            let (s, residual) = if glo.abs() <= ghi.abs() { (lo, glo) } else { (hi, ghi) };
            let generator = mu.map(|m| m + s);
            let values = generator.map(|v| v.powi(-2));
            let sqrt_values = generator.map(|v| 1.0 / v);
            Ok(FtrlAction {
                matrix: eig.recompose(&values),
                sqrt: Some(eig.recompose(&sqrt_values)),
                nu: s - lmin,
                residual,
                bracket_residuals: Some((glo, ghi)),
                loss_eig: eig,
                generator,
            })
        }
    }
}

/// Per-candidate selection score for quadratic forms `q = x~^T M x~` and
/// `h = x~^T M^{1/2} x~`:
/// entropy `[1 - exp(-alpha ||x~||^2)] q / ||x~||^2`, l_{1/2} `q / (1 + alpha h)`.
/// Zero-norm points score `-inf`.
pub fn score_from_forms(reg: Regularizer, alpha: f64, q: f64, h: f64, norm_sq: f64) -> f64 {
    if !(norm_sq > 0.0) {
        return f64::NEG_INFINITY;
    }
    match reg {
        Regularizer::Entropy => -(-alpha * norm_sq).exp_m1() * q / norm_sq,
        Regularizer::LHalf => q / (1.0 + alpha * h),
    }
}

/// Selection score of one whitened point under action `A`.
pub fn selection_score(reg: Regularizer, alpha: f64, action: &FtrlAction, x_tilde: &DVector<f64>, norm_sq: f64) -> f64 {
    let q = action.matrix.quad(x_tilde);
    let h = action.sqrt.as_ref().map_or(0.0, |s| s.quad(x_tilde));
    score_from_forms(reg, alpha, q, h, norm_sq)
}

/// Rounding parameters shared by the plain and ridge rounders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingSpec {
    pub regularizer: Regularizer,
    pub alpha: f64,
    pub k: usize,
    pub with_replacement: bool,
    /// Ridge parameter; `0` runs the unregularized rounder.
    pub ridge_lambda: f64,
}

impl RoundingSpec {
    pub fn new(regularizer: Regularizer, alpha: f64, k: usize) -> Self {
        RoundingSpec {
            regularizer,
            alpha,
            k,
            with_replacement: false,
            ridge_lambda: 0.0,
        }
    }

    pub fn with_ridge(mut self, lambda: f64) -> Self {
        self.ridge_lambda = lambda;
        self
    }

    pub fn with_replacement(mut self, flag: bool) -> Self {
        self.with_replacement = flag;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k < 1 {
            return Err(DesignError::arg("budget k must be at least 1"));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(DesignError::arg("learning rate alpha must be positive and finite"));
        }
        if !(self.ridge_lambda >= 0.0) || !self.ridge_lambda.is_finite() {
            return Err(DesignError::arg("ridge lambda must be nonnegative and finite"));
        }
        if !self.with_replacement && self.k > n {
            return Err(DesignError::arg(format!(
                "cannot select {} distinct points from a pool of {n}",
                self.k
            )));
        }
        Ok(())
    }
}

/// What happened at one rounding step.
#[derive(Clone, Debug, Serialize)]
pub struct RounderStep {
    pub index: usize,
    pub score: f64,
    /// `||x~_{i_t}||^2`
    pub norm_sq: f64,
    /// `<A_t, F_t>`
    pub loss: f64,
    /// Summand of the lambda_min lower bound contributed by this step.
    pub bound_term: f64,
    /// `max_{i in [n]}` of the full per-step bracket divided by `alpha`
    /// (including the `Tr(A - B)` / `Tr(A^{1/2} - B^{1/2})` offset).
    pub best_bracket: f64,
    /// `lambda_min(sum_{s <= t} F_s)`, from a fresh eigendecomposition.
    pub lambda_min: f64,
    /// Cumulative regret `sum <A_s, F_s> - lambda_min`.
    pub regret: f64,
    /// `Tr(A_t)` and `lambda_min(A_t)` of the action used at this step.
    pub action_trace: f64,
    pub action_min_eig: f64,
    /// Normalizer residual of `A_t`.
    pub nu_residual: f64,
}

/// Step-by-step history of a rounding run.
#[derive(Clone, Debug)]
pub struct RoundingTrace {
    pub spec: RoundingSpec,
    pub dim: usize,
    pub steps: Vec<RounderStep>,
    /// Final accumulated `sum_t F_t`.
    pub loss_total: SpdMatrix,
}

impl RoundingTrace {
    pub fn indices(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.index).collect()
    }

    pub fn regret_trace(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.regret).collect()
    }

    pub fn lambda_min_trace(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.lambda_min).collect()
    }
}

/// Greedy FTRL selection over denoised points `x_tilde` (rows).
///
/// With `d_tilde = Some(D)` every loss matrix carries the extra term `D`
/// (the ridge rounder); the score then uses the shifted matrix `B_t`.
/// `None`, or a spec with `ridge_lambda == 0`, uses `B_t = A_t` exactly.
pub fn ftrl_select(x_tilde: &DMatrix<f64>, norms_sq: &[f64], d_tilde: Option<&SpdMatrix>, spec: &RoundingSpec) -> Result<RoundingTrace> {
    let n = x_tilde.nrows();
    let d = x_tilde.ncols();
    spec.validate(n)?;
    let alpha = spec.alpha;
    let reg = spec.regularizer;
    let d_tilde = d_tilde.filter(|_| spec.ridge_lambda > 0.0);

    let mut taken = vec![false; n];
    let mut loss_total = SpdMatrix::zeros(d);
    let mut cumulative_loss = 0.0;
    let mut action = ftrl_action(&SpdMatrix::zeros(d), reg)?;
    let mut steps = Vec::with_capacity(spec.k);

    for _ in 0..spec.k {
        let shifted: Option<BMatrix> = match d_tilde {
            Some(dt) => Some(ridge_b_matrix(&action, dt, reg, alpha)?),
            None => None,
        };
        let (quad_m, half_m, offset) = match &shifted {
            Some(b) => (&b.matrix, b.sqrt.as_ref(), b.trace_offset),
            None => (&action.matrix, action.sqrt.as_ref(), 0.0),
        };
        let q = row_quadratic_forms(x_tilde, quad_m.as_matrix());
        let h = match half_m {
            Some(m) => row_quadratic_forms(x_tilde, m.as_matrix()),
            None => vec![0.0; n],
        };
        let scores: Vec<f64> = (0..n).map(|i| score_from_forms(reg, alpha, q[i], h[i], norms_sq[i])).collect();

        let (_, best_all) = argmax_lowest(&scores);
        let mut pick = None;
        for (i, &s) in scores.iter().enumerate() {
            if (spec.with_replacement || !taken[i]) && s > f64::NEG_INFINITY && pick.is_none_or(|(_, b)| s > b) {
                pick = Some((i, s));
            }
        }
        let Some((it, score)) = pick else {
            return Err(DesignError::Degenerate("no selectable point with nonzero whitened norm".into()));
        };
        taken[it] = true;

        let x: DVector<f64> = x_tilde.row(it).transpose();
        let mut loss = action.matrix.quad(&x);
        if let Some(dt) = d_tilde {
            loss += action.matrix.inner(dt);
        }
        cumulative_loss += loss;

        // Bound summand: entropy carries an explicit 1/alpha, l_{1/2} folds it
        // into alpha * x^T B x / (1 + alpha h).
        let bound_term = match reg {
            Regularizer::Entropy => (offset + score) / alpha,
            Regularizer::LHalf => offset / alpha + score,
        };
        let best_bracket = match reg {
            Regularizer::Entropy => (offset + best_all) / alpha,
            Regularizer::LHalf => offset / alpha + best_all,
        };

        loss_total.add_outer(&x, 1.0);
        if let Some(dt) = d_tilde {
            loss_total = loss_total.add(dt);
        }
        let action_trace = action.matrix.trace();
        let a_min = match reg {
            Regularizer::Entropy => action.generator.iter().copied().fold(f64::INFINITY, f64::min).exp(),
            Regularizer::LHalf => action.generator.iter().copied().fold(f64::NEG_INFINITY, f64::max).powi(-2),
        };
        let nu_residual = action.residual;

        let next = ftrl_action(&loss_total.scaled(alpha), reg)?;
        let lambda_min = next.loss_eig.lambda_min() / alpha;
        steps.push(RounderStep {
            index: it,
            score,
            norm_sq: norms_sq[it],
            loss,
            bound_term,
            best_bracket,
            lambda_min,
            regret: cumulative_loss - lambda_min,
            action_trace,
            action_min_eig: a_min,
            nu_residual,
        });
        action = next;
    }

    Ok(RoundingTrace {
        spec: *spec,
        dim: d,
        steps,
        loss_total,
    })
}

/// Outcome of a rounding run, with its certificate.
#[derive(Clone, Debug, Serialize)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    pub with_replacement: bool,
    pub criterion: CriterionKind,
    pub regularizer: Regularizer,
    pub alpha_used: f64,
    pub ridge_lambda: f64,
    /// `lambda_min(X~^T S X~ + lambda S_diamond^{-1})`.
    pub tau: f64,
    /// `f(X_S^T X_S + lambda I)`; `+inf` when that matrix is singular.
    pub objective_selected: f64,
    /// `f(S_diamond)`.
    pub f_diamond: f64,
    pub relative_objective: f64,
    /// `f(tau S_diamond)`, the value the certificate bounds the selection by.
    pub certificate_bound: f64,
    pub regret: f64,
    pub regret_trace: Vec<f64>,
    pub lambda_min_trace: Vec<f64>,
    /// `2 / (1 - exp(-alpha min_t ||x~_{i_t}||^2))`.
    pub c1_diagnostic: f64,
}

impl SelectionResult {
    pub fn selection(&self, n: usize) -> Result<Selection> {
        Selection::new(self.indices.clone(), n, self.with_replacement)
    }
}

/// Entropy-mode sample-complexity constant of the selected points.
pub fn c1_diagnostic(alpha: f64, min_norm_sq: f64) -> f64 {
    2.0 / -(-alpha * min_norm_sq).exp_m1()
}

/// Whitens, rounds and certifies. Shared by [`run_regret_min`] and the ridge rounder.
pub fn round_and_certify(pool: &DesignPool, relaxed: &RelaxedSolution, c: &Criterion, spec: &RoundingSpec) -> Result<(SelectionResult, RoundingTrace)> {
    let white = whiten(pool, relaxed, spec.ridge_lambda)?;
    let d_tilde = (spec.ridge_lambda > 0.0).then(|| white.sigma_inv.scaled(spec.ridge_lambda / spec.k as f64));
    let trace = ftrl_select(&white.x_tilde, &white.tilde_norms_sq, d_tilde.as_ref(), spec)?;
    let result = certify(pool, &white, c, spec, &trace)?;
    Ok((result, trace))
}

fn certify(pool: &DesignPool, white: &WhitenedPool, c: &Criterion, spec: &RoundingSpec, trace: &RoundingTrace) -> Result<SelectionResult> {
    let indices = trace.indices();
    let lambda = spec.ridge_lambda;

    let xt = DMatrix::from_fn(indices.len(), white.x_tilde.ncols(), |r, col| white.x_tilde[(indices[r], col)]);
    let mut cert = SpdMatrix::from_symmetrized(xt.tr_mul(&xt));
    if lambda > 0.0 {
        cert = cert.add(&white.sigma_inv.scaled(lambda));
    }
    let tau = sym_eigen(&cert)?.lambda_min();

    let selection = Selection::new(indices.clone(), pool.n(), spec.with_replacement)?;
    let mut gram = pool.selection_gram(&selection);
    if lambda > 0.0 {
        gram = gram.shifted(lambda);
    }
    let objective_selected = match c.value(&gram) {
        Ok(v) => v,
        Err(DesignError::Singular { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let f_diamond = c.value(&white.sigma_diamond)?;
    let certificate_bound = if tau > 0.0 {
        c.value(&white.sigma_diamond.scaled(tau)).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    let min_norm = indices.iter().map(|&i| white.tilde_norms_sq[i]).fold(f64::INFINITY, f64::min);
    Ok(SelectionResult {
        with_replacement: spec.with_replacement,
        criterion: c.kind(),
        regularizer: spec.regularizer,
        alpha_used: spec.alpha,
        ridge_lambda: lambda,
        tau,
        objective_selected,
        f_diamond,
        relative_objective: relative_objective(c.kind(), objective_selected, f_diamond),
        certificate_bound,
        regret: trace.steps.last().map_or(0.0, |s| s.regret),
        regret_trace: trace.regret_trace(),
        lambda_min_trace: trace.lambda_min_trace(),
        c1_diagnostic: c1_diagnostic(spec.alpha, min_norm),
        indices,
    })
}

/// Unregularized rounding of `relaxed` to `k` points.
pub fn run_regret_min(
    pool: &DesignPool,
    relaxed: &RelaxedSolution,
    c: &Criterion,
    reg: Regularizer,
    alpha: f64,
    k: usize,
    with_replacement: bool,
) -> Result<SelectionResult> {
    let spec = RoundingSpec::new(reg, alpha, k).with_replacement(with_replacement);
    round_and_certify(pool, relaxed, c, &spec).map(|(r, _)| r)
}

/// Per-prefix check of the FTRL lower bound on `lambda_min`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    /// `lambda_min - bound` after each step.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub passed: bool,
}

const BOUND_SLACK: f64 = 1e-8;

/// Verifies `lambda_min(sum_{s <= t} F_s) >= bound_t - 1e-8` at every prefix,
/// where `bound_t` is `-log(d)/alpha` (entropy) or `-2 sqrt(d)/alpha`
/// (l_{1/2}) plus the accumulated per-step terms.
pub fn verify_lambda_min_bound(trace: &RoundingTrace) -> BoundReport {
    let d = trace.dim as f64;
    let alpha = trace.spec.alpha;
    let mut bound = match trace.spec.regularizer {
        Regularizer::Entropy => -d.ln() / alpha,
        Regularizer::LHalf => -2.0 * d.sqrt() / alpha,
    };
    let margins: Vec<f64> = trace
        .steps
        .iter()
        .map(|s| {
            bound += s.bound_term;
            s.lambda_min - bound
        })
        .collect();
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    BoundReport {
        passed: margins.iter().all(|m| *m >= -BOUND_SLACK),
        margins,
        min_margin,
    }
}

/// Parameter prescriptions for the near-optimality guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PrescriptionMode {
    /// Entropy, `alpha = 4 ln d / eps`, `k >= 16 d ln d / eps^2`.
    EntropyA,
    /// Entropy, `alpha = 2 ln d / eps`, `k >= C1 d ln d / eps` for an estimate of `C1`.
    EntropyB { c1_estimate: f64 },
    /// l_{1/2}, `alpha = 8 sqrt(d) / eps`, `k >= 32 d / eps^2`.
    LHalfC,
    /// Ridge l_{1/2}, `alpha = 8 sqrt(d) / eps`, `k >= 32 d / eps^2 + 16 sqrt(d) / eps^2`.
    LHalfRidge,
}

impl PrescriptionMode {
    pub fn regularizer(self) -> Regularizer {
        match self {
            Self::EntropyA | Self::EntropyB { .. } => Regularizer::Entropy,
            Self::LHalfC | Self::LHalfRidge => Regularizer::LHalf,
        }
    }
}

/// `(alpha, k_min)` for accuracy `eps`; `k_min` is never below `d`.
pub fn prescribe_parameters(d: usize, epsilon: f64, mode: PrescriptionMode) -> Result<(f64, usize)> {
    if d < 2 {
        return Err(DesignError::arg("parameter prescriptions need d >= 2"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(DesignError::arg(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let df = d as f64;
    let (alpha, bound) = match mode {
        PrescriptionMode::EntropyA => (4.0 * df.ln() / epsilon, 16.0 * df * df.ln() / (epsilon * epsilon)),
        PrescriptionMode::EntropyB { c1_estimate } => {
            if !(c1_estimate >= 2.0) || !c1_estimate.is_finite() {
                return Err(DesignError::arg("C1 estimate must be finite and at least 2"));
            }
            (2.0 * df.ln() / epsilon, c1_estimate * df * df.ln() / epsilon)
        }
        PrescriptionMode::LHalfC => (8.0 * df.sqrt() / epsilon, 32.0 * df / (epsilon * epsilon)),
        PrescriptionMode::LHalfRidge => (
            8.0 * df.sqrt() / epsilon,
            32.0 * df / (epsilon * epsilon) + 16.0 * df.sqrt() / (epsilon * epsilon),
        ),
    };
    // Guard against the representation error of e.g. 1280.0000000000002.
    let k_min = (bound * (1.0 - 1e-12)).ceil() as usize;
    Ok((alpha, k_min.max(d)))
}

/// One point of an `alpha` sweep.
#[derive(Clone, Debug, Serialize)]
pub struct AlphaProfilePoint {
    pub alpha: f64,
    pub relative_objective: f64,
    pub objective: f64,
}

/// Rounds once per `alpha` and keeps the result with the smallest selected
/// objective (first grid entry on ties).
pub fn grid_search_alpha(
    pool: &DesignPool,
    relaxed: &RelaxedSolution,
    c: &Criterion,
    base: &RoundingSpec,
    grid: &[f64],
) -> Result<(SelectionResult, Vec<AlphaProfilePoint>)> {
    if grid.is_empty() {
        return Err(DesignError::arg("alpha grid is empty"));
    }
    let mut best: Option<SelectionResult> = None;
    let mut profile = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let spec = RoundingSpec { alpha, ..*base };
        let (r, _) = round_and_certify(pool, relaxed, c, &spec)?;
        profile.push(AlphaProfilePoint {
            alpha,
            relative_objective: r.relative_objective,
            objective: r.objective_selected,
        });
        if best.as_ref().is_none_or(|b| r.objective_selected < b.objective_selected) {
            best = Some(r);
        }
    }
    Ok((best.expect("grid is nonempty"), profile))
}
