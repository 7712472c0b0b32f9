use nalgebra::{DMatrix, DVector};

use crate::error::{DesignError, Result};
use crate::linalg::SpdMatrix;

/// The candidate pool: an `n x d` feature matrix, one point per row.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignPool {
    features: DMatrix<f64>,
}

impl DesignPool {
    pub fn new(features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(DesignError::arg(format!(
                "pool must have at least one row and column, got {}x{}",
                features.nrows(),
                features.ncols()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % features.nrows(), pos / features.nrows());
            return Err(DesignError::Data(format!("non-finite entry at row {r}, column {c}")));
        }
        Ok(DesignPool { features })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(DesignError::arg("rows have unequal lengths"));
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// Point `i` as a column vector.
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    /// `X^T X`.
    pub fn gram(&self) -> SpdMatrix {
        SpdMatrix::from_symmetrized(self.features.tr_mul(&self.features))
    }

    /// Rows picked by `indices` (repeats allowed), in order.
    pub fn rows_of(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), self.d(), |r, c| self.features[(indices[r], c)])
    }

    /// `X_S^T X_S`, counting repeated indices with multiplicity.
    pub fn selection_gram(&self, selection: &Selection) -> SpdMatrix {
        let xs = self.rows_of(selection.indices());
        SpdMatrix::from_symmetrized(xs.tr_mul(&xs))
    }
}

/// An ordered list of selected point indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    indices: Vec<usize>,
    with_replacement: bool,
}

impl Selection {
    pub fn new(indices: Vec<usize>, n: usize, with_replacement: bool) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(DesignError::arg(format!("index {bad} out of range for pool of {n}")));
        }
        if !with_replacement {
            let mut seen = vec![false; n];
            for &i in &indices {
                if seen[i] {
                    return Err(DesignError::arg(format!(
                        "index {i} repeated in a without-replacement selection"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(Selection {
            indices,
            with_replacement,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn with_replacement(&self) -> bool {
        self.with_replacement
    }

    /// Multiplicity vector `s` of length `n`.
    pub fn counts(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for &i in &self.indices {
            s[i] += 1.0;
        }
        s
    }
}
