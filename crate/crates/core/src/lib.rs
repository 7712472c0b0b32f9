//! Near-optimal experimental design by regret minimization.
//!
//! The pipeline relaxes the integer subset-selection problem to a convex
//! program over the simplex ([`relax`]), whitens the pool by the relaxed
//! covariance, and rounds to `k` points with a Follow-the-Regularized-Leader
//! game over trace-one PSD matrices ([`ftrl`], [`ridge`]). Baseline
//! selectors, a logistic-regression evaluation harness, data generators and
//! an experiment runner sit around that core.

pub mod baselines;
pub mod criteria;
pub mod data;
pub mod error;
pub mod evalrisk;
pub mod experiment;
pub mod ftrl;
pub mod linalg;
pub mod pool;
pub mod relax;
pub mod ridge;
pub mod rng;

pub use criteria::{Criterion, CriterionKind};
pub use error::{DesignError, Result};
pub use linalg::{EigenDecomposition, SpdMatrix};
pub use pool::{DesignPool, Selection};
pub use rng::RngSeed;
