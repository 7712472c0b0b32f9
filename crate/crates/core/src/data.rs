//! Synthetic pools, spectral-embedding preprocessing and file I/O.
//!
//! Matrices are CSV files with one point per row, written with 17
//! significant digits so a write/read round trip is exact. A first line that
//! does not parse as numbers is treated as a header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::linalg::{sym_eigen, SpdMatrix};
use crate::pool::DesignPool;
use crate::rng::RngSeed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub rows: usize,
    pub cols: usize,
    /// Gram eigenvalues decay as `i^{-decay}`.
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub blocks: Vec<BlockSpec>,
    pub seed: RngSeed,
    /// Multiplies every block, so `lambda_1 = scale^2`.
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl SyntheticSpec {
    /// Two `1000 x 50` blocks with quadratic and linear decay.
    pub fn benchmark(seed: RngSeed) -> Self {
        Self::two_blocks(1000, 50, seed)
    }

    /// Two `rows x cols` blocks with decay 2 and 1.
    pub fn two_blocks(rows: usize, cols: usize, seed: RngSeed) -> Self {
        SyntheticSpec {
            blocks: vec![BlockSpec { rows, cols, decay: 2.0 }, BlockSpec { rows, cols, decay: 1.0 }],
            seed,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(DesignError::Config("synthetic spec has no blocks".into()));
        }
        for b in &self.blocks {
            if b.cols == 0 || b.rows < b.cols {
                return Err(DesignError::Config(format!("block {}x{} needs rows >= cols >= 1", b.rows, b.cols)));
            }
            if !(b.decay > 0.0) || !b.decay.is_finite() {
                return Err(DesignError::Config(format!("decay exponent must be positive, got {}", b.decay)));
            }
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(DesignError::Config("scale must be positive".into()));
        }
        Ok(())
    }
}

/// Gaussian `rows x cols` matrix whose singular values are replaced by
/// `i^{-p/2}`, so the Gram eigenvalues are exactly `i^{-p}`.
pub fn generate_decay_block(rows: usize, cols: usize, p: f64, seed: RngSeed) -> Result<DMatrix<f64>> {
    if cols == 0 || rows < cols {
        return Err(DesignError::arg(format!("decay block {rows}x{cols} needs rows >= cols >= 1")));
    }
    let mut rng = seed.rng();
    let g = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let svd = g.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(cols, |i, _| ((i + 1) as f64).powf(-p / 2.0)));
    Ok(u * s * vt)
}

/// Block-diagonal pool from independent decay blocks.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DesignPool> {
    spec.validate()?;
    let n: usize = spec.blocks.iter().map(|b| b.rows).sum();
    let d: usize = spec.blocks.iter().map(|b| b.cols).sum();
    let mut x = DMatrix::zeros(n, d);
    let (mut r0, mut c0) = (0, 0);
    for (bi, b) in spec.blocks.iter().enumerate() {
        let block = generate_decay_block(b.rows, b.cols, b.decay, spec.seed.derive(&[bi as u64]))?;
        x.view_mut((r0, c0), (b.rows, b.cols)).copy_from(&(block * spec.scale));
        r0 += b.rows;
        c0 += b.cols;
    }
    DesignPool::new(x)
}

/// The 2000 x 100 two-block benchmark pool.
pub fn generate_benchmark_synthetic(seed: RngSeed) -> Result<DesignPool> {
    generate_synthetic(&SyntheticSpec::benchmark(seed))
}

/// I.i.d. standard normal entries.
pub fn gaussian_pool(n: usize, d: usize, seed: RngSeed) -> Result<DesignPool> {
    let mut rng = seed.rng();
    DesignPool::new(DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphEmbeddingSpec {
    pub neighbors: usize,
    pub target_dim: usize,
}

/// Indices of the `m` nearest other points of every point (ties to lower index).
pub fn knn_lists(pool: &DesignPool, m: usize) -> Vec<Vec<usize>> {
    let x = pool.features();
    let n = pool.n();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut dist: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| ((x.row(i) - x.row(j)).norm_squared(), j)).collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dist.truncate(m);
            dist.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// `I - D^{-1/2} A D^{-1/2}` for the union-symmetrized unit-weight k-NN graph.
pub fn normalized_laplacian(pool: &DesignPool, neighbors: usize) -> Result<SpdMatrix> {
    let n = pool.n();
    if neighbors == 0 || neighbors >= n {
        return Err(DesignError::arg(format!("neighbor count must lie in [1, {}), got {neighbors}", n)));
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, list) in knn_lists(pool, neighbors).into_iter().enumerate() {
        for j in list {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    if let Some(i) = deg.iter().position(|&v| v == 0.0) {
        return Err(DesignError::Data(format!("vertex {i} is isolated; increase the neighbor count")));
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|v| 1.0 / v.sqrt()).collect();
    let l = DMatrix::from_fn(n, n, |i, j| {
        let off = a[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            1.0 - off
        } else {
            -off
        }
    });
    Ok(SpdMatrix::from_symmetrized(l))
}

/// Rows of the first `target_dim` eigenvectors (ascending eigenvalues) of the
/// normalized Laplacian, each sign-fixed so its first nonzero entry is positive.
pub fn spectral_embed(pool: &DesignPool, spec: &GraphEmbeddingSpec) -> Result<DesignPool> {
    if spec.target_dim == 0 || spec.target_dim > pool.n() {
        return Err(DesignError::arg(format!("target dimension must lie in [1, {}]", pool.n())));
    }
    let l = normalized_laplacian(pool, spec.neighbors)?;
    let eig = sym_eigen(&l)?;
    DesignPool::new(eig.eigenvectors.columns(0, spec.target_dim).into_owned())
}

fn io_err(path: &Path, source: std::io::Error) -> DesignError {
    DesignError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).comment(Some(b'#')).from_reader(file))
}

/// Numeric rows of a CSV file, skipping a non-numeric first line.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut first = true;
    for rec in csv_reader(path)?.records() {
        let rec = rec.map_err(|e| DesignError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => {
                if let Some(w) = rows.first().map(Vec::len) {
                    if v.len() != w {
                        return Err(DesignError::Parse {
                            line,
                            message: format!("expected {w} fields, found {}", v.len()),
                        });
                    }
                }
                if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                    return Err(DesignError::Parse {
                        line,
                        message: format!("non-finite value {bad}"),
                    });
                }
                rows.push(v);
            }
            Err(_) if first => {}
            Err(e) => {
                return Err(DesignError::Parse {
                    line,
                    message: format!("{e} in '{}'", rec.iter().collect::<Vec<_>>().join(",")),
                })
            }
        }
        first = false;
    }
    Ok(rows)
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = read_rows(path)?;
    if rows.is_empty() {
        return Err(DesignError::Data(format!("{} contains no numeric rows", path.display())));
    }
    let (n, d) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

pub fn read_pool_csv(path: &Path) -> Result<DesignPool> {
    DesignPool::new(read_matrix_csv(path)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

/// 17 significant digits: enough for an exact f64 round trip.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>, header: Option<&[String]>) -> Result<()> {
    let mut w = create(path)?;
    let mut body = String::new();
    if let Some(h) = header {
        body.push_str(&h.join(","));
        body.push('\n');
    }
    for i in 0..m.nrows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format_f64(*v)).collect();
        body.push_str(&line.join(","));
        body.push('\n');
    }
    w.write_all(body.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// One value per row (a single-column CSV, optional header).
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let rows = read_rows(path)?;
    if let Some(r) = rows.first().filter(|r| r.len() != 1) {
        return Err(DesignError::Parse {
            line: 1,
            message: format!("expected one column, found {}", r.len()),
        });
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

pub fn write_vector_csv(path: &Path, name: &str, v: &[f64]) -> Result<()> {
    write_matrix_csv(path, &DMatrix::from_column_slice(v.len(), 1, v), Some(&[name.to_string()]))
}

/// Nonnegative integers, one per row (indices or 0-based class labels).
pub fn read_index_csv(path: &Path) -> Result<Vec<usize>> {
    read_vector_csv(path)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            if v >= 0.0 && v.fract() == 0.0 && v < usize::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(DesignError::Parse {
                    line: i + 1,
                    message: format!("expected a nonnegative integer, found {v}"),
                })
            }
        })
        .collect()
}

pub fn write_index_csv(path: &Path, name: &str, v: &[usize]) -> Result<()> {
    let mut w = create(path)?;
    let mut body = format!("{name}\n");
    for i in v {
        body.push_str(&i.to_string());
        body.push('\n');
    }
    w.write_all(body.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// A selection with its certificate, as written by `select`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionRecord {
    pub method: String,
    pub criterion: String,
    pub budget: usize,
    pub indices: Vec<usize>,
    pub with_replacement: bool,
    pub objective: f64,
    pub f_diamond: Option<f64>,
    pub relative_objective: Option<f64>,
    pub tau: Option<f64>,
    pub regret_trace: Option<Vec<f64>>,
    pub c1: Option<f64>,
    pub alpha: Option<f64>,
    pub ridge_lambda: f64,
    pub regularizer: Option<String>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| DesignError::Data(e.to_string()))?;
    w.write_all(text.as_bytes()).and_then(|_| w.write_all(b"\n")).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads and schema-checks a JSON document.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| DesignError::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}
