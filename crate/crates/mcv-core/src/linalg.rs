//! Dense matrices and symmetric positive definite kernels.
//!
//! Everything downstream (whitening, metrics, axiom checks) works with
//! covariance matrices of desk-scale dimension, so the kernels here are
//! written directly: Cholesky factorization, SPD inverse and inverse square
//! root, and a cyclic Jacobi eigensolver with a deterministic eigenvector
//! sign convention. Matrices are stored row-major.

use crate::error::{McvError, Result};

/// Relative pivot floor for Cholesky: a pivot at or below
/// `n * PIVOT_REL_TOL * max|S|` reports `NotPositiveDefinite`.
pub const PIVOT_REL_TOL: f64 = 1e-14;

/// Jacobi sweep cap; exceeding it reports `NoConvergence`.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Jacobi convergence target: off-diagonal Frobenius norm relative to the
/// Frobenius norm of the input.
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Relative eigenvalue floor for the inverse square root: an eigenvalue at or
/// below `EIG_REL_FLOOR * lambda_max` reports `NotPositiveDefinite`.
pub const EIG_REL_FLOOR: f64 = 1e-12;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Matrix from row slices; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(McvError::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable row `i`.
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Main diagonal.
    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for j in 0..other.cols {
                    out_row[j] += a * orow[j];
                }
            }
        }
        out
    }

    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Adds `value` to every diagonal entry.
    pub fn add_diag(&mut self, value: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += value;
        }
    }

    /// Multiplies every entry by `value`.
    pub fn scaled(&self, value: f64) -> Matrix {
        let mut out = self.clone();
        for x in &mut out.data {
            *x *= value;
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entrywise difference against `other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    /// True when `|S - S^T|` is within `tol` entrywise.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// True when every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Block-diagonal composition `[[a, 0], [0, b]]`.
    pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows + b.rows, a.cols + b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                out[(i, j)] = a[(i, j)];
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                out[(a.rows + i, a.cols + j)] = b[(i, j)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor of an SPD matrix, `S = L L^T`.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    lower: Matrix,
}

impl SpdFactorization {
    /// The factor `L`.
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn order(&self) -> usize {
        self.lower.nrows()
    }

    /// `log det S = 2 * sum(log L_ii)`, computed in log space so determinants
    /// of high-dimensional matrices neither overflow nor underflow.
    pub fn log_det(&self) -> f64 {
        (0..self.order())
            .map(|i| self.lower[(i, i)].ln())
            .sum::<f64>()
            * 2.0
    }

    /// Solves `S x = b` by forward then backward substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.order();
        assert_eq!(b.len(), n, "solve shape mismatch");
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&l.row(i)[..i], &y[..i]);
            y[i] = (y[i] - s) / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }

    /// Explicit inverse of the lower factor, `L^-1` (also lower triangular).
    pub fn inverse_lower(&self) -> Matrix {
        let n = self.order();
        let l = &self.lower;
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            inv[(j, j)] = 1.0 / l[(j, j)];
            for i in (j + 1)..n {
                let s = dot(&l.row(i)[j..i], &inv.column_segment(j, j, i));
                inv[(i, j)] = -s / l[(i, i)];
            }
        }
        inv
    }
}

impl Matrix {
    /// Entries `self[from..to, j]` gathered into a vector; used by the
    /// triangular inverse.
    fn column_segment(&self, j: usize, from: usize, to: usize) -> Vec<f64> {
        (from..to).map(|i| self[(i, j)]).collect()
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// A pivot at or below `n * 1e-14 * max|S|` reports `NotPositiveDefinite`
/// rather than producing a garbage factor.
pub fn cholesky(s: &Matrix) -> Result<SpdFactorization> {
    let n = s.nrows();
    assert_eq!(n, s.ncols(), "cholesky requires a square matrix");
    let floor = n as f64 * PIVOT_REL_TOL * s.max_abs();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let acc = dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                let pivot = s[(i, i)] - acc;
                if pivot <= floor {
                    return Err(McvError::NotPositiveDefinite {
                        context: "Cholesky pivot at or below the positive-definiteness floor",
                    });
                }
                l[(i, i)] = pivot.sqrt();
            } else {
                l[(i, j)] = (s[(i, j)] - acc) / l[(j, j)];
            }
        }
    }
    Ok(SpdFactorization { lower: l })
}

/// Inverse of an SPD matrix via its Cholesky factor: `S^-1 = L^-T L^-1`.
///
/// The result is symmetrized exactly by construction.
pub fn spd_inverse(s: &Matrix) -> Result<Matrix> {
    let fact = cholesky(s)?;
    let linv = fact.inverse_lower();
    let n = linv.nrows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            // (L^-T L^-1)_ij = sum_k L^-1_ki L^-1_kj, nonzero for k >= max(i, j).
            let mut acc = 0.0;
            for k in i..n {
                acc += linv[(k, i)] * linv[(k, j)];
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc;
        }
    }
    Ok(out)
}

/// Eigendecomposition of a symmetric matrix: `S = G diag(values) G^T` with
/// eigenvalues sorted in descending order and eigenvectors as the columns of
/// `vectors`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    /// Ratio of the largest to smallest absolute eigenvalue; `f64::INFINITY`
    /// when the smallest vanishes. Callers surface a conditioning warning
    /// above 1e10.
    pub fn condition_ratio(&self) -> f64 {
        let max = self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let min = self
            .values
            .iter()
            .fold(f64::INFINITY, |a, v| a.min(v.abs()));
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Reassembles `G diag(f(values)) G^T`.
    pub fn assemble(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for (k, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for i in 0..n {
                let gi = self.vectors[(i, k)] * fv;
                if gi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += gi * self.vectors[(j, k)];
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps rotate every upper-triangle pair in row order until the
/// off-diagonal Frobenius norm falls to `1e-12 * ||S||_F`, capped at 100
/// sweeps. The returned eigenvectors follow a deterministic sign convention:
/// the entry of largest magnitude in each eigenvector is made positive, ties
/// broken by the first such entry, so repeated runs and reordered inputs
/// produce identical bases.
pub fn sym_eigen(s: &Matrix) -> Result<SymEigen> {
    let n = s.nrows();
    assert_eq!(n, s.ncols(), "sym_eigen requires a square matrix");
    debug_assert!(
        s.is_symmetric(1e-8 * (1.0 + s.max_abs())),
        "sym_eigen requires a symmetric matrix"
    );
    let mut a = s.clone();
    let mut g = Matrix::identity(n);
    let target = JACOBI_REL_TOL * s.frobenius();

    let off_diag = |a: &Matrix| -> f64 {
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        sum.sqrt()
    };

    let mut converged = n < 2 || off_diag(&a) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(McvError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s_ = t * c;
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s_ * akq;
                        a[(p, k)] = a[(k, p)];
                        a[(k, q)] = s_ * akp + c * akq;
                        a[(q, k)] = a[(k, q)];
                    }
                }
                for k in 0..n {
                    let gkp = g[(k, p)];
                    let gkq = g[(k, q)];
                    g[(k, p)] = c * gkp - s_ * gkq;
                    g[(k, q)] = s_ * gkp + c * gkq;
                }
            }
        }
        converged = off_diag(&a) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        values.push(a[(src, src)]);
        let mut best = 0;
        for i in 1..n {
            if g[(i, src)].abs() > g[(best, src)].abs() {
                best = i;
            }
        }
        let flip = if g[(best, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, k)] = flip * g[(i, src)];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Symmetric inverse square root `S^{-1/2} = G diag(lambda^{-1/2}) G^T`.
///
/// An eigenvalue at or below `1e-12 * lambda_max` reports
/// `NotPositiveDefinite`.
pub fn spd_inv_sqrt(s: &Matrix) -> Result<Matrix> {
    let eig = sym_eigen(s)?;
    let lambda_max = eig.values.first().copied().unwrap_or(0.0);
    if eig.values.iter().any(|&v| v <= EIG_REL_FLOOR * lambda_max) || lambda_max <= 0.0 {
        return Err(McvError::NotPositiveDefinite {
            context: "eigenvalue at or below the relative floor in spd_inv_sqrt",
        });
    }
    Ok(eig.assemble(|v| 1.0 / v.sqrt()))
}

/// Quadratic form `v^T M v`.
pub fn quadratic_form(m: &Matrix, v: &[f64]) -> f64 {
    dot(&m.matvec(v), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn cholesky_of_known_two_by_two() {
        let s = mat(&[&[1.0, 1.0], &[1.0, 2.0]]);
        let f = cholesky(&s).unwrap();
        let expected = mat(&[&[1.0, 0.0], &[1.0, 1.0]]);
        assert!(f.lower().max_abs_diff(&expected) < 1e-15);
        let recon = f.lower().matmul(&f.lower().transpose());
        assert!(recon.max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let s = mat(&[&[1.0, 2.0], &[2.0, 1.0]]);
        match cholesky(&s) {
            Err(McvError::NotPositiveDefinite { .. }) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_rejects_zero_matrix() {
        let s = Matrix::zeros(1, 1);
        assert!(matches!(
            cholesky(&s),
            Err(McvError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn spd_inverse_of_known_two_by_two() {
        let s = mat(&[&[1.0, 1.0], &[1.0, 2.0]]);
        let inv = spd_inverse(&s).unwrap();
        let expected = mat(&[&[2.0, -1.0], &[-1.0, 1.0]]);
        assert!(inv.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn quadratic_form_matches_hand_value() {
        let s = mat(&[&[1.0, 1.0], &[1.0, 2.0]]);
        let inv = spd_inverse(&s).unwrap();
        let q = quadratic_form(&inv, &[3.0, 3.0]);
        assert!((q - 9.0).abs() < 1e-12);
    }

    #[test]
    fn sym_eigen_two_by_two_correlation_closed_form() {
        for rho in [-0.9, -0.3, 0.5, 0.99] {
            let s = mat(&[&[1.0, rho], &[rho, 1.0]]);
            let eig = sym_eigen(&s).unwrap();
            assert!((eig.values[0] - (1.0 + rho.abs())).abs() < 1e-12);
            assert!((eig.values[1] - (1.0 - rho.abs())).abs() < 1e-12);
            // For rho != 0 the eigenvectors are (1, +-1)/sqrt(2); the sign
            // convention makes the largest-magnitude entry positive.
            for k in 0..2 {
                let col = [eig.vectors[(0, k)], eig.vectors[(1, k)]];
                assert!((col[0].abs() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
                assert!(col[0].max(col[1]) > 0.0);
            }
        }
        let eig_id = sym_eigen(&mat(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(eig_id.values, vec![1.0, 1.0]);
    }

    #[test]
    fn sym_eigen_sign_convention_is_deterministic() {
        let s = mat(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 1.5]]);
        let a = sym_eigen(&s).unwrap();
        let b = sym_eigen(&s).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.vectors.max_abs_diff(&b.vectors) == 0.0);
        for k in 0..3 {
            let col: Vec<f64> = (0..3).map(|i| a.vectors[(i, k)]).collect();
            let mut best = 0;
            for i in 1..3 {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            assert!(col[best] > 0.0);
        }
    }

    #[test]
    fn spd_inv_sqrt_squares_to_inverse() {
        let s = mat(&[&[2.0, 0.6, 0.0], &[0.6, 1.0, 0.3], &[0.0, 0.3, 0.7]]);
        let r = spd_inv_sqrt(&s).unwrap();
        let should_be_id = r.matmul(&s).matmul(&r);
        assert!(should_be_id.max_abs_diff(&Matrix::identity(3)) < 1e-10);
    }

    #[test]
    fn spd_inv_sqrt_rejects_near_singular() {
        let s = mat(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-15]]);
        assert!(matches!(
            spd_inv_sqrt(&s),
            Err(McvError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn solve_and_inverse_lower_agree() {
        let s = mat(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 1.5]]);
        let f = cholesky(&s).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = f.solve(&b);
        let back = s.matvec(&x);
        for i in 0..3 {
            assert!((back[i] - b[i]).abs() < 1e-12);
        }
        let linv = f.inverse_lower();
        let should_be_id = linv.matmul(f.lower());
        assert!(should_be_id.max_abs_diff(&Matrix::identity(3)) < 1e-12);
    }

    #[test]
    fn log_det_matches_product_of_pivots() {
        let s = mat(&[&[1.0, 1.0], &[1.0, 2.0]]);
        let f = cholesky(&s).unwrap();
        assert!((f.log_det() - 0.0_f64).abs() < 1e-14); // det = 1
    }

    #[test]
    fn block_diag_layout() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = mat(&[&[5.0]]);
        let c = Matrix::block_diag(&a, &b);
        assert_eq!(c.nrows(), 3);
        assert_eq!(c[(0, 1)], 2.0);
        assert_eq!(c[(2, 2)], 5.0);
        assert_eq!(c[(2, 0)], 0.0);
        assert_eq!(c[(0, 2)], 0.0);
    }

    /// Random SPD matrix A A^T + small diagonal, entries from a simple seeded
    /// generator so proptest shrinking stays deterministic.
    fn spd_strategy(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-1.0_f64..1.0, n * n).prop_map(move |entries| {
            let mut a = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = entries[i * n + j];
                }
            }
            let mut s = a.matmul(&a.transpose());
            s.add_diag(0.05 * n as f64);
            s
        })
    }

    proptest! {
        #[test]
        fn cholesky_reconstructs(s in spd_strategy(4)) {
            let f = cholesky(&s).unwrap();
            let recon = f.lower().matmul(&f.lower().transpose());
            prop_assert!(recon.max_abs_diff(&s) <= 1e-10 * (1.0 + s.max_abs()));
        }

        #[test]
        fn spd_inverse_gives_identity(s in spd_strategy(4)) {
            let inv = spd_inverse(&s).unwrap();
            let id = inv.matmul(&s);
            prop_assert!(id.max_abs_diff(&Matrix::identity(4)) < 1e-8);
            prop_assert!(inv.is_symmetric(1e-12 * (1.0 + inv.max_abs())));
        }

        #[test]
        fn sym_eigen_reconstructs_and_is_orthonormal(s in spd_strategy(5)) {
            let eig = sym_eigen(&s).unwrap();
            let recon = eig.assemble(|v| v);
            prop_assert!(recon.max_abs_diff(&s) <= 1e-9 * (1.0 + s.max_abs()));
            let gtg = eig.vectors.transpose().matmul(&eig.vectors);
            prop_assert!(gtg.max_abs_diff(&Matrix::identity(5)) < 1e-10);
            for w in eig.values.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }

        #[test]
        fn inv_sqrt_matches_inverse(s in spd_strategy(3)) {
            let r = spd_inv_sqrt(&s).unwrap();
            let inv = spd_inverse(&s).unwrap();
            let rr = r.matmul(&r);
            prop_assert!(rr.max_abs_diff(&inv) <= 1e-8 * (1.0 + inv.max_abs()));
        }
    }
}
