//! Continuous relaxation of the design problem: minimize
//! `f(k * sum_i w_i x_i x_i^T + lambda I)` over the probability simplex by
//! entropic mirror descent (exponentiated gradient).

use serde::{Deserialize, Serialize};

use crate::criteria::Criterion;
use crate::error::{DesignError, Result};
use crate::pool::DesignPool;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// Constant step `gamma`.
    Fixed(f64),
    /// `gamma_t = c * sqrt(ln n) / (G_inf * sqrt(t))`, with `G_inf` the
    /// running maximum of the sup-norm of the simplex gradient.
    Decaying(f64),
    /// Backtracking: starts at `c / G_inf`, grows by 1.5 after each accepted
    /// step and halves while the objective would rise. Smooth criteria only;
    /// E and G fall back to `Decaying(c)`.
    Adaptive(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorDescentConfig {
    pub max_iters: usize,
    /// Stop once `|f_t - f_{t-1}| / |f_{t-1}|` drops below this.
    pub rel_tol: f64,
    pub step_rule: StepRule,
    pub budget_k: usize,
    pub ridge_lambda: f64,
}

impl MirrorDescentConfig {
    pub fn new(budget_k: usize) -> Self {
        MirrorDescentConfig {
            max_iters: 20_000,
            rel_tol: 1e-5,
            step_rule: StepRule::Adaptive(1.0),
            budget_k,
            ridge_lambda: 0.0,
        }
    }

    pub fn with_ridge(mut self, lambda: f64) -> Self {
        self.ridge_lambda = lambda;
        self
    }

    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(DesignError::arg("max_iters must be at least 1"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(DesignError::arg("rel_tol must be positive"));
        }
        if !(self.ridge_lambda >= 0.0) || !self.ridge_lambda.is_finite() {
            return Err(DesignError::arg("ridge lambda must be nonnegative and finite"));
        }
        if self.budget_k < 1 {
            return Err(DesignError::arg("budget k must be at least 1"));
        }
        match self.step_rule {
            StepRule::Fixed(g) | StepRule::Decaying(g) | StepRule::Adaptive(g) if !(g > 0.0) => {
                Err(DesignError::arg("step size constants must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Relaxed optimum `pi = k * omega` together with the solver trace.
#[derive(Clone, Debug, Serialize)]
pub struct RelaxedSolution {
    pub pi: Vec<f64>,
    pub omega: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub budget_k: usize,
    pub ridge_lambda: f64,
    /// Frank-Wolfe gap `<g, omega> - min_i g_i` at the solution; bounds
    /// `objective_value - f_opt` since every criterion is convex in `omega`.
    pub duality_gap: f64,
}

fn frank_wolfe_gap(omega: &[f64], grad_omega: &[f64]) -> f64 {
    let lin: f64 = omega.iter().zip(grad_omega).map(|(w, g)| w * g).sum();
    let min = grad_omega.iter().copied().fold(f64::INFINITY, f64::min);
    (lin - min).max(0.0)
}

impl RelaxedSolution {
    /// Wraps externally computed weights (e.g. loaded from a file).
    pub fn from_weights(pool: &DesignPool, criterion: &Criterion, pi: Vec<f64>, ridge_lambda: f64) -> Result<Self> {
        if pi.len() != pool.n() {
            return Err(DesignError::arg("weight vector length does not match the pool"));
        }
        let total: f64 = pi.iter().sum();
        if !(total > 0.0) {
            return Err(DesignError::arg("weights must have positive sum"));
        }
        let (objective_value, g_pi) = criterion.value_and_gradient(pool, &pi, ridge_lambda)?;
        let omega: Vec<f64> = pi.iter().map(|p| p / total).collect();
        let grad: Vec<f64> = g_pi.iter().map(|g| total * g).collect();
        Ok(RelaxedSolution {
            duality_gap: frank_wolfe_gap(&omega, &grad),
            omega,
            budget_k: total.round() as usize,
            pi,
            objective_value,
            iterations: 0,
            trace: vec![objective_value],
            converged: true,
            ridge_lambda,
        })
    }
}

/// One exponentiated-gradient step `w_i exp(-gamma g_i) / Z`, evaluated with
/// the gradient minimum over the support subtracted first.
pub fn mirror_step(omega: &[f64], grad: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if omega.len() != grad.len() {
        return Err(DesignError::arg("omega and gradient lengths differ"));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(DesignError::Numeric("non-finite gradient in mirror step".into()));
    }
    let gmin = omega
        .iter()
        .zip(grad)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, g)| *g)
        .fold(f64::INFINITY, f64::min);
    if !gmin.is_finite() {
        return Err(DesignError::State("mirror step on an all-zero weight vector".into()));
    }
    let mut out: Vec<f64> = omega
        .iter()
        .zip(grad)
        .map(|(w, g)| if *w > 0.0 { w * (-gamma * (g - gmin)).exp() } else { 0.0 })
        .collect();
    let z: f64 = out.iter().sum();
    if !(z > 0.0) {
        return Err(DesignError::State("mirror step normalizer vanished".into()));
    }
    out.iter_mut().for_each(|w| *w /= z);
    Ok(out)
}

const MAX_HALVINGS: usize = 40;
const NONSMOOTH_WINDOW: usize = 100;

/// Solves the relaxed problem from the uniform start.
///
/// Smooth criteria (A, D, V) use a monotone safeguard: a step that raises the
/// objective is halved until it does not. E and G take plain subgradient
/// steps; the best iterate is returned and the run stops once the best value
/// has improved by less than `rel_tol` over the last 100 iterations.
pub fn solve_relaxed(pool: &DesignPool, c: &Criterion, cfg: &MirrorDescentConfig) -> Result<RelaxedSolution> {
    cfg.validate()?;
    let n = pool.n();
    let k = cfg.budget_k as f64;
    let ridge = cfg.ridge_lambda;
    let evaluate = |omega: &[f64]| -> Result<(f64, Vec<f64>)> {
        let pi: Vec<f64> = omega.iter().map(|w| k * w).collect();
        c.value_and_gradient(pool, &pi, ridge)
    };

    let mut omega = vec![1.0 / n as f64; n];
    let (mut f_cur, mut g_pi) = evaluate(&omega).map_err(|e| match e {
        DesignError::Singular {
            lambda_min, lambda_max, ..
        } => DesignError::Singular {
            lambda_min,
            lambda_max,
            hint: "; the pool Gram matrix is rank-deficient, use a positive ridge lambda",
        },
        other => other,
    })?;

    let mut trace = vec![f_cur];
    let mut best = (f_cur, omega.clone());
    let mut best_history = vec![f_cur];
    let mut g_inf: f64 = 0.0;
    let mut converged = n == 1;
    let mut iterations = 0;
    let smooth = c.kind().is_smooth();
    let log_n = (n as f64).ln().max(f64::MIN_POSITIVE);
    let step_rule = match cfg.step_rule {
        StepRule::Adaptive(c0) if !smooth => StepRule::Decaying(c0),
        rule => rule,
    };
    let mut adaptive_gamma: Option<f64> = None;

    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        let t = iterations as f64;
        let grad: Vec<f64> = g_pi.iter().map(|g| k * g).collect();
        g_inf = grad.iter().fold(g_inf, |m, g| m.max(g.abs()));
        if g_inf == 0.0 {
            converged = true;
            break;
        }
        let mut gamma = match step_rule {
            StepRule::Fixed(g) => g,
            StepRule::Decaying(c0) => c0 * log_n.sqrt() / (g_inf * t.sqrt()),
            StepRule::Adaptive(c0) => *adaptive_gamma.get_or_insert(c0 / g_inf),
        };

        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = mirror_step(&omega, &grad, gamma)?;
            match evaluate(&cand) {
                Ok((f_new, g_new)) if !smooth || f_new <= f_cur => {
                    accepted = Some((cand, f_new, g_new));
                    break;
                }
                Ok(_) | Err(DesignError::Singular { .. }) => gamma *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if let Some(g) = adaptive_gamma.as_mut() {
            *g = gamma * 1.5;
        }
        let Some((cand, f_new, g_new)) = accepted else {
            // No halving of the step decreases the objective: stationary up to
            // floating-point resolution.
            converged = true;
            break;
        };

        let rel = (f_new - f_cur).abs() / f_cur.abs().max(f64::MIN_POSITIVE);
        omega = cand;
        f_cur = f_new;
        g_pi = g_new;
        trace.push(f_cur);
        if f_cur < best.0 {
            best = (f_cur, omega.clone());
        }
        best_history.push(best.0);

        if smooth {
            if rel < cfg.rel_tol {
                converged = true;
            }
        } else if best_history.len() > NONSMOOTH_WINDOW {
            let old = best_history[best_history.len() - 1 - NONSMOOTH_WINDOW];
            if (old - best.0).abs() / old.abs().max(f64::MIN_POSITIVE) < cfg.rel_tol {
                converged = true;
            }
        }
    }

    let (objective_value, omega) = best;
    let grad: Vec<f64> = evaluate(&omega)?.1.iter().map(|g| k * g).collect();
    Ok(RelaxedSolution {
        duality_gap: frank_wolfe_gap(&omega, &grad),
        pi: omega.iter().map(|w| k * w).collect(),
        omega,
        objective_value,
        iterations,
        trace,
        converged,
        budget_k: cfg.budget_k,
        ridge_lambda: ridge,
    })
}
