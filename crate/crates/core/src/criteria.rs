//! Matrix optimality criteria (A, D, E, V, G): values, gradients with respect
//! to the design weights, and a randomized checker for the convexity /
//! monotonicity / reciprocal sub-linearity contract the rounding guarantee
//! relies on.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::linalg::{regularized_covariance, row_quadratic_forms, sym_eigen, EigenDecomposition, SpdMatrix};
use crate::pool::DesignPool;
use crate::rng::RngSeed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriterionKind {
    /// `(1/d) Tr(S^-1)`
    A,
    /// `-(1/d) log det S`
    D,
    /// `||S^-1||_2 = 1 / lambda_min(S)`
    E,
    /// `(1/n) <S^-1, X^T X>`
    V,
    /// `max_j x_j^T S^-1 x_j`
    G,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 5] = [Self::A, Self::D, Self::E, Self::V, Self::G];

    /// Whether the criterion is differentiable everywhere on the PD cone.
    pub fn is_smooth(self) -> bool {
        matches!(self, Self::A | Self::D | Self::V)
    }

    pub fn needs_pool(self) -> bool {
        matches!(self, Self::V | Self::G)
    }

    /// Whether `f(t S) = f(S) / t` holds for all `t > 0`.
    pub fn is_homogeneous(self) -> bool {
        !matches!(self, Self::D)
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::A => "A",
            Self::D => "D",
            Self::E => "E",
            Self::V => "V",
            Self::G => "G",
        };
        f.write_str(s)
    }
}

impl FromStr for CriterionKind {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Self::A),
            "D" => Ok(Self::D),
            "E" => Ok(Self::E),
            "V" => Ok(Self::V),
            "G" => Ok(Self::G),
            other => Err(DesignError::arg(format!("unknown criterion '{other}', expected A|D|E|V|G"))),
        }
    }
}

#[derive(Debug)]
struct PoolReference {
    features: DMatrix<f64>,
    gram: DMatrix<f64>,
}

/// An optimality criterion, carrying the full pool when it needs one (V, G).
#[derive(Clone, Debug)]
pub struct Criterion {
    kind: CriterionKind,
    reference: Option<Arc<PoolReference>>,
}

impl Criterion {
    /// Builds the criterion against `pool`; V and G keep a reference copy of it.
    pub fn new(kind: CriterionKind, pool: &DesignPool) -> Self {
        let reference = kind.needs_pool().then(|| {
            Arc::new(PoolReference {
                features: pool.features().clone(),
                gram: pool.gram().into_inner(),
            })
        });
        Criterion { kind, reference }
    }

    /// A, D and E do not reference the pool.
    pub fn standalone(kind: CriterionKind) -> Result<Self> {
        if kind.needs_pool() {
            return Err(DesignError::arg(format!("criterion {kind} requires a pool reference")));
        }
        Ok(Criterion { kind, reference: None })
    }

    pub fn kind(&self) -> CriterionKind {
        self.kind
    }

    fn reference(&self) -> &PoolReference {
        self.reference
            .as_deref()
            .expect("V and G criteria are always constructed with a pool reference")
    }

    pub fn value(&self, sigma: &SpdMatrix) -> Result<f64> {
        let eig = sym_eigen(sigma)?;
        self.value_from_eigen(&eig)
    }

    /// Value given the eigendecomposition of `sigma`.
    pub fn value_from_eigen(&self, eig: &EigenDecomposition) -> Result<f64> {
        eig.ensure_nonsingular("")?;
        let d = eig.dim() as f64;
        let lam = &eig.eigenvalues;
        Ok(match self.kind {
            CriterionKind::A => lam.iter().map(|l| 1.0 / l).sum::<f64>() / d,
            CriterionKind::D => -lam.iter().map(|l| l.ln()).sum::<f64>() / d,
            CriterionKind::E => 1.0 / eig.lambda_min(),
            CriterionKind::V => {
                let r = self.reference();
                let inv = eig.map(|l| 1.0 / l);
                inv.as_matrix().dot(&r.gram) / r.features.nrows() as f64
            }
            CriterionKind::G => {
                let inv = eig.map(|l| 1.0 / l);
                let q = row_quadratic_forms(&self.reference().features, inv.as_matrix());
                argmax_lowest(&q).1
            }
        })
    }

    /// Value and weight gradient of `w -> f(sum_i w_i x_i x_i^T + ridge I)`.
    ///
    /// For E and G the returned vector is a subgradient: E uses the unit
    /// eigenvector of the smallest eigenvalue (lowest index on ties), G the
    /// lowest-index maximizing row.
    pub fn value_and_gradient(&self, pool: &DesignPool, weights: &[f64], ridge: f64) -> Result<(f64, Vec<f64>)> {
        let sigma = regularized_covariance(pool, weights, ridge)?;
        let eig = sym_eigen(&sigma)?;
        let value = self.value_from_eigen(&eig)?;
        let x = pool.features();
        let d = pool.d() as f64;
        let grad = match self.kind {
            CriterionKind::A => {
                let inv2 = eig.map(|l| 1.0 / (l * l));
                scale(row_quadratic_forms(x, inv2.as_matrix()), -1.0 / d)
            }
            CriterionKind::D => {
                let inv = eig.map(|l| 1.0 / l);
                scale(row_quadratic_forms(x, inv.as_matrix()), -1.0 / d)
            }
            CriterionKind::V => {
                let r = self.reference();
                let inv = eig.map(|l| 1.0 / l).into_inner();
                let m = SpdMatrix::from_symmetrized(&inv * &r.gram * &inv);
                scale(row_quadratic_forms(x, m.as_matrix()), -1.0 / r.features.nrows() as f64)
            }
            CriterionKind::E => {
                let v = eig.vector(0);
                let lmin = eig.lambda_min();
                let proj = x * &v;
                proj.iter().map(|p| -(p * p) / (lmin * lmin)).collect()
            }
            CriterionKind::G => {
                let r = self.reference();
                let inv = eig.map(|l| 1.0 / l).into_inner();
                let q = row_quadratic_forms(&r.features, &inv);
                let (jstar, _) = argmax_lowest(&q);
                let xj: DVector<f64> = r.features.row(jstar).transpose();
                let u = &inv * xj;
                let proj = x * u;
                proj.iter().map(|p| -(p * p)).collect()
            }
        };
        Ok((value, grad))
    }
}

fn scale(mut v: Vec<f64>, s: f64) -> Vec<f64> {
    v.iter_mut().for_each(|x| *x *= s);
    v
}

/// `(index, value)` of the maximum, lowest index on ties.
pub(crate) fn argmax_lowest(v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &x) in v.iter().enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

/// `f(sigma)` for criterion `c`.
pub fn criterion_value(c: &Criterion, sigma: &SpdMatrix) -> Result<f64> {
    c.value(sigma)
}

/// Ratio of a design value to the relaxed optimum. For D, whose value is a
/// log, this is `exp(f - f_diamond) = (det S_diamond / det S)^{1/d}`, so
/// every criterion reports a ratio that is at least one for feasible designs.
pub fn relative_objective(kind: CriterionKind, value: f64, f_diamond: f64) -> f64 {
    match kind {
        CriterionKind::D => (value - f_diamond).exp(),
        _ => value / f_diamond,
    }
}

/// `df/dw_i` of `f(sum_i w_i x_i x_i^T + ridge I)`.
pub fn criterion_weight_gradient(c: &Criterion, pool: &DesignPool, weights: &[f64], ridge: f64) -> Result<Vec<f64>> {
    c.value_and_gradient(pool, weights, ridge).map(|(_, g)| g)
}

/// One `(A, B, t)` triple for [`check_assumption_f`].
#[derive(Clone, Debug)]
pub struct AssumptionSample {
    pub a: SpdMatrix,
    pub b: SpdMatrix,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AssumptionProperty {
    Convexity,
    Monotonicity,
    ReciprocalSublinearity,
    Evaluation,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionViolation {
    pub sample: usize,
    pub property: AssumptionProperty,
    /// The side that should be smaller.
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AssumptionReport {
    pub samples: usize,
    pub monotone_pairs_checked: usize,
    pub violations: Vec<AssumptionViolation>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn failures(&self, p: AssumptionProperty) -> usize {
        self.violations.iter().filter(|v| v.property == p).count()
    }
}

const ASSUMPTION_SLACK: f64 = 1e-9;

/// Checks convexity, monotonicity and reciprocal sub-linearity of `c` on the
/// sampled triples. Monotonicity is checked on `(A, A + B)` for every sample
/// and on `(A, B)` whenever `A <= B` in the Loewner order.
pub fn check_assumption_f(c: &Criterion, samples: &[AssumptionSample]) -> AssumptionReport {
    let mut report = AssumptionReport {
        samples: samples.len(),
        ..Default::default()
    };
    for (idx, s) in samples.iter().enumerate() {
        let mut push = |property, lhs: f64, rhs: f64| {
            if !(lhs <= rhs + ASSUMPTION_SLACK) {
                report.violations.push(AssumptionViolation {
                    sample: idx,
                    property,
                    lhs,
                    rhs,
                });
            }
        };
        let eval = |m: &SpdMatrix| c.value(m);
        let (fa, fb) = match (eval(&s.a), eval(&s.b)) {
            (Ok(fa), Ok(fb)) => (fa, fb),
            _ => {
                push(AssumptionProperty::Evaluation, f64::INFINITY, 0.0);
                continue;
            }
        };
        let t = s.t;
        if let Ok(mix) = eval(&s.a.scaled(t).add(&s.b.scaled(1.0 - t))) {
            push(AssumptionProperty::Convexity, mix, t * fa + (1.0 - t) * fb);
        }
        if let Ok(fab) = eval(&s.a.add(&s.b)) {
            push(AssumptionProperty::Monotonicity, fab, fa);
            report.monotone_pairs_checked += 1;
        }
        let loewner = sym_eigen(&s.b.sub(&s.a)).map(|e| e.lambda_min() >= -1e-12).unwrap_or(false);
        if loewner {
            push(AssumptionProperty::Monotonicity, fb, fa);
            report.monotone_pairs_checked += 1;
        }
        if let Ok(fta) = eval(&s.a.scaled(t)) {
            push(AssumptionProperty::ReciprocalSublinearity, fta, fa / t);
        }
    }
    report
}

/// Random PD pairs `G G^T / m + 0.05 I` with `t` uniform in `(0.01, 0.99)`.
pub fn random_assumption_samples(d: usize, count: usize, seed: RngSeed) -> Vec<AssumptionSample> {
    let mut rng = seed.rng();
    let pd = |rng: &mut rand_chacha::ChaCha20Rng| {
        let m = d + 2;
        let g = DMatrix::from_fn(d, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        SpdMatrix::from_symmetrized(&g * g.transpose() / m as f64).shifted(0.05)
    };
    (0..count)
        .map(|_| {
            let a = pd(&mut rng);
            let b = pd(&mut rng);
            let t = rng.random_range(0.01..0.99);
            AssumptionSample { a, b, t }
        })
        .collect()
}
