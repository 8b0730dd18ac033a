//! Datasets and first/second moment summaries.
//!
//! A `DataSet` is a finite rectangular table of observations (rows) over
//! named variables (columns). A `MomentSummary` is a mean vector plus a
//! covariance matrix under an explicit convention: `population` (1/N),
//! `unbiased` (1/(N-1)), or `analytic` for summaries written down directly
//! rather than estimated. All dispersion metrics consume summaries, so the
//! convention choice is made once, at estimation time, and travels with the
//! summary.

use serde::{Deserialize, Serialize};

use crate::error::{McvError, Result};
use crate::linalg::Matrix;

/// Relative scale used to flag a column as having (numerically) zero spread.
const DEGENERATE_REL_SD: f64 = 1e-12;
/// Relative tolerance for covariance symmetry at construction.
const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Covariance normalization convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    Population,
    Unbiased,
    Analytic,
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Convention::Population => "population",
            Convention::Unbiased => "unbiased",
            Convention::Analytic => "analytic",
        };
        f.write_str(s)
    }
}

/// Rectangular table of finite observations over named variables.
#[derive(Debug, Clone)]
pub struct DataSet {
    names: Vec<String>,
    data: Matrix,
}

impl DataSet {
    /// Builds a dataset from rows, validating shape and finiteness.
    pub fn new(names: Vec<String>, rows: &[Vec<f64>]) -> Result<DataSet> {
        if names.is_empty() {
            return Err(McvError::InvalidInput("dataset has no variables".into()));
        }
        if rows.is_empty() {
            return Err(McvError::InvalidInput("dataset has no observations".into()));
        }
        let n_vars = names.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_vars {
                return Err(McvError::DimensionMismatch {
                    expected: n_vars,
                    got: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(McvError::NonFinite { row: i, col: j });
                }
            }
        }
        let data = Matrix::from_rows(rows)?;
        Ok(DataSet { names, data })
    }

    /// Wraps an observation matrix (rows = observations) with variable names.
    pub fn from_matrix(names: Vec<String>, data: Matrix) -> Result<DataSet> {
        if names.len() != data.ncols() {
            return Err(McvError::DimensionMismatch {
                expected: names.len(),
                got: data.ncols(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..data.nrows()).map(|i| data.row(i).to_vec()).collect();
        DataSet::new(names, &rows)
    }

    pub fn n_obs(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.data.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_obs()).map(|i| self.data[(i, j)]).collect()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    /// Applies `x -> A x` to every observation.
    pub fn transform(&self, a: &Matrix) -> Result<DataSet> {
        if a.ncols() != self.n_vars() {
            return Err(McvError::DimensionMismatch {
                expected: self.n_vars(),
                got: a.ncols(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..self.n_obs()).map(|i| a.matvec(self.row(i))).collect();
        let names = (0..a.nrows()).map(|k| format!("t{k}")).collect();
        DataSet::new(names, &rows)
    }

    /// Applies `x -> x + c` to every observation.
    pub fn shifted(&self, c: &[f64]) -> Result<DataSet> {
        if c.len() != self.n_vars() {
            return Err(McvError::DimensionMismatch {
                expected: self.n_vars(),
                got: c.len(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..self.n_obs())
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(c)
                    .map(|(x, ci)| x + ci)
                    .collect::<Vec<f64>>()
            })
            .collect();
        DataSet::new(self.names.clone(), &rows)
    }

    /// Duplicates every column, mapping each observation `x` to `(x, x)`.
    pub fn duplicate_columns(&self) -> DataSet {
        let mut names = self.names.clone();
        names.extend(self.names.iter().map(|s| format!("{s}_dup")));
        let rows: Vec<Vec<f64>> = (0..self.n_obs())
            .map(|i| {
                let r = self.row(i);
                let mut v = r.to_vec();
                v.extend_from_slice(r);
                v
            })
            .collect();
        DataSet::new(names, &rows).expect("duplicating a valid dataset stays valid")
    }

    /// Returns a copy with one extra observation appended.
    pub fn append_row(&self, x: &[f64]) -> Result<DataSet> {
        if x.len() != self.n_vars() {
            return Err(McvError::DimensionMismatch {
                expected: self.n_vars(),
                got: x.len(),
            });
        }
        let mut rows: Vec<Vec<f64>> = (0..self.n_obs()).map(|i| self.row(i).to_vec()).collect();
        rows.push(x.to_vec());
        DataSet::new(self.names.clone(), &rows)
    }
}

/// Mean vector and covariance matrix under an explicit convention.
#[derive(Debug, Clone)]
pub struct MomentSummary {
    mean: Vec<f64>,
    cov: Matrix,
    convention: Convention,
}

impl MomentSummary {
    /// Validates finiteness, shape, and covariance symmetry (within a
    /// relative tolerance of 1e-12), then stores the symmetrized matrix.
    pub fn new(mean: Vec<f64>, cov: Matrix, convention: Convention) -> Result<MomentSummary> {
        if mean.is_empty() {
            return Err(McvError::InvalidInput("empty mean vector".into()));
        }
        for (j, v) in mean.iter().enumerate() {
            if !v.is_finite() {
                return Err(McvError::NonFinite { row: 0, col: j });
            }
        }
        if cov.nrows() != cov.ncols() {
            return Err(McvError::DimensionMismatch {
                expected: cov.nrows(),
                got: cov.ncols(),
            });
        }
        if cov.nrows() != mean.len() {
            return Err(McvError::DimensionMismatch {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        if !cov.all_finite() {
            let (r, c) = first_nonfinite(&cov);
            return Err(McvError::NonFinite { row: r, col: c });
        }
        let tol = SYMMETRY_REL_TOL * (1.0 + cov.max_abs());
        if !cov.is_symmetric(tol) {
            return Err(McvError::InvalidInput(
                "covariance matrix is not symmetric".into(),
            ));
        }
        let n = cov.nrows();
        let mut sym = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                sym[(i, j)] = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            }
        }
        for i in 0..n {
            if sym[(i, i)] < 0.0 {
                return Err(McvError::InvalidInput(format!(
                    "negative variance at index {i}"
                )));
            }
        }
        Ok(MomentSummary {
            mean,
            cov: sym,
            convention,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// True when every off-diagonal covariance entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.cov[(i, j)] != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// Marginal standard deviation of component `i`.
    pub fn sd(&self, i: usize) -> f64 {
        self.cov[(i, i)].max(0.0).sqrt()
    }

    /// Marginal coefficient of variation `sd_i / |m_i|` of component `i`.
    pub fn marginal_cv(&self, i: usize) -> Result<f64> {
        if self.mean[i] == 0.0 {
            return Err(McvError::ZeroMean);
        }
        Ok(self.sd(i) / self.mean[i].abs())
    }

    /// Correlation matrix. Fails on any (numerically) zero-variance
    /// component, since the corresponding row is undefined.
    pub fn corr(&self) -> Result<Matrix> {
        let n = self.dim();
        let mut sds = Vec::with_capacity(n);
        for i in 0..n {
            let sd = self.sd(i);
            if sd <= DEGENERATE_REL_SD * (1.0 + self.mean[i].abs()) {
                return Err(McvError::DegenerateColumn { index: i });
            }
            sds.push(sd);
        }
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] = self.cov[(i, j)] / (sds[i] * sds[j]);
            }
            p[(i, i)] = 1.0;
        }
        Ok(p)
    }
}

fn first_nonfinite(m: &Matrix) -> (usize, usize) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_finite() {
                return (i, j);
            }
        }
    }
    (0, 0)
}

/// Estimates mean and covariance from data under the given convention.
///
/// Rejects columns with (numerically) zero variance: every metric downstream
/// divides by spread in some form, so a flat column is reported here, by
/// index, rather than as a factorization failure later.
pub fn estimate_moments(data: &DataSet, convention: Convention) -> Result<MomentSummary> {
    let n = data.n_obs();
    let p = data.n_vars();
    let denom = match convention {
        Convention::Population => n as f64,
        Convention::Unbiased => {
            if n < 2 {
                return Err(McvError::InvalidInput(
                    "unbiased covariance needs at least 2 observations".into(),
                ));
            }
            (n - 1) as f64
        }
        Convention::Analytic => {
            return Err(McvError::InvalidInput(
                "analytic summaries are written down, not estimated".into(),
            ))
        }
    };
    let mut mean = vec![0.0; p];
    for i in 0..n {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += data.row(i)[j];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = Matrix::zeros(p, p);
    for i in 0..n {
        let row = data.row(i);
        for a in 0..p {
            let da = row[a] - mean[a];
            for b in a..p {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    for j in 0..p {
        let sd_floor = DEGENERATE_REL_SD * (1.0 + mean[j].abs());
        if cov[(j, j)] <= sd_floor * sd_floor {
            return Err(McvError::DegenerateColumn { index: j });
        }
    }
    MomentSummary::new(mean, cov, convention)
}

/// Weighted plug-in moments with explicit observation weights.
///
/// Weights must be nonnegative and sum to 1 within 1e-12. Point masses are
/// legal: the covariance may be singular or all zeros, and failures surface
/// later, at factorization or correlation time.
pub fn weighted_moments(data: &DataSet, weights: &[f64]) -> Result<MomentSummary> {
    let n = data.n_obs();
    if weights.len() != n {
        return Err(McvError::DimensionMismatch {
            expected: n,
            got: weights.len(),
        });
    }
    let mut sum = 0.0;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(McvError::InvalidInput(format!("invalid weight {w}")));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(McvError::WeightSum { sum });
    }
    let p = data.n_vars();
    let mut mean = vec![0.0; p];
    for (i, &w) in weights.iter().enumerate() {
        let row = data.row(i);
        for (j, m) in mean.iter_mut().enumerate() {
            *m += w * row[j];
        }
    }
    let mut cov = Matrix::zeros(p, p);
    for (i, &w) in weights.iter().enumerate() {
        let row = data.row(i);
        for a in 0..p {
            let da = row[a] - mean[a];
            for b in a..p {
                cov[(a, b)] += w * da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in (a + 1)..p {
            cov[(b, a)] = cov[(a, b)];
        }
    }
    MomentSummary::new(mean, cov, Convention::Population)
}

/// Independent coupling of two summaries: concatenated means and
/// block-diagonal covariance. Conventions must agree.
pub fn coupling_moments(a: &MomentSummary, b: &MomentSummary) -> Result<MomentSummary> {
    if a.convention() != b.convention() {
        return Err(McvError::InvalidInput(
            "cannot couple summaries with different conventions".into(),
        ));
    }
    let mut mean = a.mean().to_vec();
    mean.extend_from_slice(b.mean());
    let cov = Matrix::block_diag(a.cov(), b.cov());
    MomentSummary::new(mean, cov, a.convention())
}

/// Translates the mean by `c`, leaving the covariance unchanged.
pub fn shift_moments(ms: &MomentSummary, c: &[f64]) -> Result<MomentSummary> {
    if c.len() != ms.dim() {
        return Err(McvError::DimensionMismatch {
            expected: ms.dim(),
            got: c.len(),
        });
    }
    let mean = ms.mean().iter().zip(c).map(|(m, ci)| m + ci).collect();
    MomentSummary::new(mean, ms.cov().clone(), ms.convention())
}

/// Pushes the summary through the linear map `x -> A x`:
/// mean `A m`, covariance `A S A^T`.
pub fn scale_moments(ms: &MomentSummary, a: &Matrix) -> Result<MomentSummary> {
    let n = ms.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(McvError::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let mean = a.matvec(ms.mean());
    let cov = a.matmul(ms.cov()).matmul(&a.transpose());
    // Products of a symmetric matrix with A and A^T can drift off symmetric
    // by rounding; the constructor symmetrizes within tolerance.
    MomentSummary::new(mean, cov, ms.convention())
}
