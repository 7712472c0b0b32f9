//! Dense symmetric linear algebra shared by every module: the [`SpdMatrix`]
//! newtype, ascending eigendecompositions, spectral matrix functions and the
//! weighted covariance `sum_i w_i x_i x_i^T`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{DesignError, Result};
use crate::pool::DesignPool;

/// Relative threshold below which `lambda_min / lambda_max` counts as singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

const SYMMETRY_RTOL: f64 = 1e-10;
const PSD_RTOL: f64 = 1e-10;

/// A dense symmetric matrix, used for covariances, action matrices and
/// accumulated losses.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Wraps `(m + m^T) / 2`. Panics if `m` is not square.
    pub fn from_symmetrized(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "SpdMatrix requires a square matrix");
        let t = m.transpose();
        SpdMatrix((m + t) * 0.5)
    }

    /// Checked constructor: symmetric within `1e-10` relative and no
    /// eigenvalue below `-1e-10 * ||m||_2`.
    pub fn new_psd(m: DMatrix<f64>) -> Result<Self> {
        let s = Self::checked_symmetric(m)?;
        let eig = s.eigen()?;
        let scale = eig.spectral_norm();
        if eig.lambda_min() < -PSD_RTOL * scale {
            return Err(DesignError::Domain {
                function: "PSD constructor",
                eigenvalue: eig.lambda_min(),
            });
        }
        Ok(s)
    }

    /// Checked constructor requiring strictly positive eigenvalues.
    pub fn new_pd(m: DMatrix<f64>) -> Result<Self> {
        let s = Self::checked_symmetric(m)?;
        let eig = s.eigen()?;
        if eig.lambda_min() <= 0.0 {
            return Err(DesignError::Domain {
                function: "PD constructor",
                eigenvalue: eig.lambda_min(),
            });
        }
        Ok(s)
    }

    fn checked_symmetric(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(DesignError::arg(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(DesignError::arg("matrix has non-finite entries"));
        }
        let asym = (&m - m.transpose()).norm();
        if asym > SYMMETRY_RTOL * m.norm().max(f64::MIN_POSITIVE) {
            return Err(DesignError::arg(format!(
                "matrix is not symmetric (||M - M^T||_F = {asym:e})"
            )));
        }
        Ok(Self::from_symmetrized(m))
    }

    pub fn identity(d: usize) -> Self {
        SpdMatrix(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        SpdMatrix(DMatrix::zeros(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SpdMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Frobenius inner product `<self, other>`.
    pub fn inner(&self, other: &SpdMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn scaled(&self, s: f64) -> SpdMatrix {
        SpdMatrix(&self.0 * s)
    }

    pub fn add(&self, other: &SpdMatrix) -> SpdMatrix {
        SpdMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SpdMatrix) -> SpdMatrix {
        SpdMatrix(&self.0 - &other.0)
    }

    /// `self + s * I`.
    pub fn shifted(&self, s: f64) -> SpdMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += s;
        }
        SpdMatrix(m)
    }

    /// Adds the rank-one term `s * x x^T` in place.
    pub fn add_outer(&mut self, x: &DVector<f64>, s: f64) {
        self.0.ger(s, x, x, 1.0);
    }

    /// Quadratic form `x^T M x`.
    pub fn quad(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * x))
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        sym_eigen(self)
    }
}

/// Ascending eigendecomposition `M = V diag(lambda) V^T`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn spectral_norm(&self) -> f64 {
        self.lambda_min().abs().max(self.lambda_max().abs())
    }

    /// Unit eigenvector for the `i`-th smallest eigenvalue.
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// `V diag(g(lambda)) V^T` without domain checks.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> SpdMatrix {
        let mapped = self.eigenvalues.map(g);
        self.recompose(&mapped)
    }

    /// `V diag(values) V^T` for caller-supplied spectral values.
    pub fn recompose(&self, values: &DVector<f64>) -> SpdMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[j];
        }
        SpdMatrix::from_symmetrized(scaled * self.eigenvectors.transpose())
    }

    pub fn reconstruct(&self) -> SpdMatrix {
        self.recompose(&self.eigenvalues)
    }

    /// Errors when `lambda_min <= 1e-12 * lambda_max`.
    pub fn ensure_nonsingular(&self, hint: &'static str) -> Result<()> {
        let (lo, hi) = (self.lambda_min(), self.lambda_max());
        if !(lo > SINGULAR_RTOL * hi) || hi <= 0.0 {
            return Err(DesignError::Singular {
                lambda_min: lo,
                lambda_max: hi,
                hint,
            });
        }
        Ok(())
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
///
/// Each eigenvector is sign-normalized so that its first component with
/// magnitude above `1e-10` is positive, which makes the output a
/// deterministic function of the input.
pub fn sym_eigen(m: &SpdMatrix) -> Result<EigenDecomposition> {
    let d = m.dim();
    if d == 0 {
        return Err(DesignError::arg("eigendecomposition of an empty matrix"));
    }
    if m.0.iter().any(|v| !v.is_finite()) {
        return Err(DesignError::Numeric(
            "eigendecomposition input has non-finite entries".into(),
        ));
    }
    let max_iters = 1000 + 100 * d;
    let eig = SymmetricEigen::try_new(m.0.clone(), f64::EPSILON, max_iters).ok_or_else(|| {
        let mut off = m.0.clone();
        off.fill_diagonal(0.0);
        DesignError::NonConvergence {
            iterations: max_iters,
            residual: off.norm(),
        }
    })?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(d, d);
    for (j, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-10) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
        eigenvectors.set_column(j, &col);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Scalar maps understood by [`spd_function`].
#[derive(Clone, Copy)]
pub enum ScalarMap<'a> {
    Exp,
    /// Requires strictly positive eigenvalues.
    Log,
    /// Clamps eigenvalues in `[-1e-10 * ||M||, 0)` to zero.
    Sqrt,
    /// Requires strictly positive eigenvalues.
    InvSqrt,
    /// Requires strictly positive eigenvalues.
    Inverse,
    Square,
    Custom(&'a dyn Fn(f64) -> f64),
}

/// `V g(Lambda) V^T` for the spectral map `g`.
pub fn spd_function(m: &SpdMatrix, g: ScalarMap<'_>) -> Result<SpdMatrix> {
    let eig = sym_eigen(m)?;
    spectral_apply(&eig, g)
}

/// Same as [`spd_function`] for an already decomposed matrix.
pub fn spectral_apply(eig: &EigenDecomposition, g: ScalarMap<'_>) -> Result<SpdMatrix> {
    let positive = |name: &'static str| -> Result<()> {
        let lo = eig.lambda_min();
        if lo <= 0.0 {
            Err(DesignError::Domain {
                function: name,
                eigenvalue: lo,
            })
        } else {
            Ok(())
        }
    };
    Ok(match g {
        ScalarMap::Exp => eig.map(f64::exp),
        ScalarMap::Log => {
            positive("log")?;
            eig.map(f64::ln)
        }
        ScalarMap::Sqrt => {
            let lo = eig.lambda_min();
            if lo < -PSD_RTOL * eig.spectral_norm() {
                return Err(DesignError::Domain {
                    function: "sqrt",
                    eigenvalue: lo,
                });
            }
            eig.map(|v| v.max(0.0).sqrt())
        }
        ScalarMap::InvSqrt => {
            positive("x^(-1/2)")?;
            eig.map(|v| 1.0 / v.sqrt())
        }
        ScalarMap::Inverse => {
            positive("x^(-1)")?;
            eig.map(|v| 1.0 / v)
        }
        ScalarMap::Square => eig.map(|v| v * v),
        ScalarMap::Custom(f) => eig.map(f),
    })
}

/// Weighted covariance `sum_i w_i x_i x_i^T`, symmetrized after accumulation.
pub fn covariance(pool: &DesignPool, weights: &[f64]) -> Result<SpdMatrix> {
    if weights.len() != pool.n() {
        return Err(DesignError::arg(format!(
            "weight vector has length {}, pool has {} points",
            weights.len(),
            pool.n()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(DesignError::arg("weights must be nonnegative and finite"));
    }
    let x = pool.features();
    let mut wx = x.clone();
    for (i, mut row) in wx.row_iter_mut().enumerate() {
        row *= weights[i];
    }
    Ok(SpdMatrix::from_symmetrized(x.tr_mul(&wx)))
}

/// `sum_i w_i x_i x_i^T + ridge * I`.
pub fn regularized_covariance(pool: &DesignPool, weights: &[f64], ridge: f64) -> Result<SpdMatrix> {
    let c = covariance(pool, weights)?;
    Ok(if ridge != 0.0 { c.shifted(ridge) } else { c })
}

/// `q_i = x_i^T M x_i` for every row `x_i` of `x`.
pub fn row_quadratic_forms(x: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<f64> {
    let xm = x * m;
    (0..x.nrows())
        .map(|i| xm.row(i).dot(&x.row(i)))
        .collect()
}
