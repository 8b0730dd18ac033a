//! Whitening transforms derived from a moment summary.
//!
//! A whitening transform is a matrix `W` with `W S W^T = Id`, so the image
//! of the data (or of a random vector with covariance `S`) has identity
//! covariance. Two constructions are provided:
//!
//! * ZCA-cor: `W = P^{-1/2} V^{-1/2}`, where `V` is the diagonal of marginal
//!   variances and `P` the correlation matrix. This is the symmetric square
//!   root route and is stable under per-axis rescaling: scaling the data by
//!   a positive diagonal matrix leaves the whitened image unchanged.
//! * Cholesky: `W = L^{-1}` for `S = L L^T`. Cheaper, triangular, and also
//!   stable under positive per-axis rescaling, but tied to the variable
//!   ordering.
//!
//! Applying a transform maps `x -> W x` without centering, so whitened data
//! keeps a meaningful mean `W m`.

use crate::error::{McvError, Result};
use crate::linalg::{cholesky, sym_eigen, Matrix, EIG_REL_FLOOR};
use crate::moments::{DataSet, MomentSummary};

/// Eigenvalue ratios above this suggest the metric values are dominated by
/// noise in the smallest principal directions; callers should warn.
pub const CONDITION_WARN_THRESHOLD: f64 = 1e10;

/// Whitened mean entries at or below this magnitude make a component CV
/// undefined.
const ZERO_WHITENED_MEAN_TOL: f64 = 1e-14;

/// Which whitening construction produced a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhiteningKind {
    ZcaCor,
    Cholesky,
}

impl std::fmt::Display for WhiteningKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WhiteningKind::ZcaCor => f.write_str("zca-cor"),
            WhiteningKind::Cholesky => f.write_str("cholesky"),
        }
    }
}

/// A whitening matrix together with its provenance and a conditioning
/// diagnostic (ratio of the extreme eigenvalues of the matrix that was
/// factored: the correlation matrix for ZCA-cor, the covariance for
/// Cholesky).
#[derive(Debug, Clone)]
pub struct WhiteningTransform {
    matrix: Matrix,
    kind: WhiteningKind,
    condition: f64,
}

impl WhiteningTransform {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn kind(&self) -> WhiteningKind {
        self.kind
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Applies `W` to a single vector.
    pub fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(McvError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(self.matrix.matvec(v))
    }
}

/// ZCA-cor whitening `W = P^{-1/2} V^{-1/2}` of the summary's covariance.
pub fn zca_cor_whitening(ms: &MomentSummary) -> Result<WhiteningTransform> {
    let n = ms.dim();
    let p = ms.corr()?;
    let eig = sym_eigen(&p)?;
    let lambda_max = eig.values[0];
    if eig.values[n - 1] <= EIG_REL_FLOOR * lambda_max {
        return Err(McvError::NotPositiveDefinite {
            context: "correlation matrix",
        });
    }
    let p_inv_sqrt = eig.assemble(|l| 1.0 / l.sqrt());
    let mut w = p_inv_sqrt;
    for j in 0..n {
        let inv_sd = 1.0 / ms.sd(j);
        for i in 0..n {
            w[(i, j)] *= inv_sd;
        }
    }
    Ok(WhiteningTransform {
        matrix: w,
        kind: WhiteningKind::ZcaCor,
        condition: eig.condition_ratio(),
    })
}

/// Cholesky whitening `W = L^{-1}` for covariance `S = L L^T`.
pub fn cholesky_whitening(ms: &MomentSummary) -> Result<WhiteningTransform> {
    let fact = cholesky(ms.cov())?;
    let w = fact.inverse_lower();
    let eig = sym_eigen(ms.cov())?;
    Ok(WhiteningTransform {
        matrix: w,
        kind: WhiteningKind::Cholesky,
        condition: eig.condition_ratio(),
    })
}

/// Maps every observation through `x -> W x`. No centering is applied.
pub fn apply_whitening(t: &WhiteningTransform, data: &DataSet) -> Result<DataSet> {
    if data.n_vars() != t.dim() {
        return Err(McvError::DimensionMismatch {
            expected: t.dim(),
            got: data.n_vars(),
        });
    }
    let names = data
        .names()
        .iter()
        .map(|s| format!("{s}_w"))
        .collect::<Vec<String>>();
    let rows: Vec<Vec<f64>> = (0..data.n_obs())
        .map(|i| t.matrix.matvec(data.row(i)))
        .collect();
    DataSet::new(names, &rows)
}

/// Per-component coefficients of variation of the whitened vector.
///
/// The whitened covariance is the identity, so component `i` has standard
/// deviation 1 and CV `1 / |(W m)_i|`. A whitened mean entry at zero makes
/// that component's CV undefined.
pub fn component_cvs(t: &WhiteningTransform, ms: &MomentSummary) -> Result<Vec<f64>> {
    let wm = t.apply_vec(ms.mean())?;
    let mut cvs = Vec::with_capacity(wm.len());
    for (i, v) in wm.iter().enumerate() {
        if v.abs() <= ZERO_WHITENED_MEAN_TOL {
            return Err(McvError::ZeroWhitenedMean { index: i });
        }
        cvs.push(1.0 / v.abs());
    }
    Ok(cvs)
}
