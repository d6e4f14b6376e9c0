//! Householder QR least squares.

#![allow(clippy::needless_range_loop)]

use super::{check_fit_inputs, CoefficientVector};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, RealVector};

/// Relative threshold on `|R[i,i]|` below which a column counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// What to do when a column of the design matrix is numerically dependent on
/// earlier columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankPolicy {
    /// Fail with [`Error::RankDeficient`] when `|R[i,i]| < 1e-12 · max|R[j,j]|`.
    Strict,
    /// Skip a column whose remaining norm is below `1e-12` times its original
    /// norm and pin its coefficient to zero. This is the basic least-squares
    /// solution: predictions are unaffected, the dependent column simply
    /// carries no weight.
    DropDependent,
}

/// Compact Householder factorization `A = QR`.
///
/// Reflector `p` is stored in column `pivot_cols[p]` of `qr`, rows `p..m`;
/// the strict upper part of `qr` (restricted to kept columns) holds `R`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    qr: Vec<f64>,
    rdiag: Vec<f64>,
    rows: usize,
    cols: usize,
    /// Columns that received a reflector, in order. `R` row `p` belongs to `pivot_cols[p]`.
    pivot_cols: Vec<usize>,
    dependent: Vec<usize>,
}

impl HouseholderQr {
    /// Factorizes `a` (rows ≥ cols). With [`RankPolicy::Strict`] every column gets a
    /// reflector; use [`HouseholderQr::first_deficient_column`] to check rank.
    pub fn factor(a: &DenseMatrix, policy: RankPolicy) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::InsufficientRows {
                op: "HouseholderQr::factor",
                rows: m,
                cols: n,
            });
        }
        let mut qr = a.as_slice().to_vec();
        let mut rdiag = vec![0.0; n];
        let mut pivot_cols = Vec::with_capacity(n);
        let mut dependent = Vec::new();

        for k in 0..n {
            let r = pivot_cols.len();
            let mut norm_sq = 0.0;
            for i in r..m {
                norm_sq += qr[i * n + k] * qr[i * n + k];
            }
            let mut norm = norm_sq.sqrt();

            if policy == RankPolicy::DropDependent {
                let mut orig_sq = 0.0;
                for i in 0..m {
                    orig_sq += a.get(i, k) * a.get(i, k);
                }
                if norm <= RANK_TOLERANCE * orig_sq.sqrt() {
                    dependent.push(k);
                    continue;
                }
            }

            pivot_cols.push(k);
            if norm == 0.0 {
                rdiag[k] = 0.0;
                continue;
            }
            if qr[r * n + k] < 0.0 {
                norm = -norm;
            }
            for i in r..m {
                qr[i * n + k] /= norm;
            }
            qr[r * n + k] += 1.0;

            for j in k + 1..n {
                let mut s = 0.0;
                for i in r..m {
                    s += qr[i * n + k] * qr[i * n + j];
                }
                s = -s / qr[r * n + k];
                for i in r..m {
                    qr[i * n + j] += s * qr[i * n + k];
                }
            }
            rdiag[k] = -norm;
        }

        Ok(HouseholderQr {
            qr,
            rdiag,
            rows: m,
            cols: n,
            pivot_cols,
            dependent,
        })
    }

    /// Diagonal of `R` indexed by original column (zero for dropped columns).
    pub fn r_diagonal(&self) -> &[f64] {
        &self.rdiag
    }

    /// Columns skipped under [`RankPolicy::DropDependent`].
    pub fn dependent_columns(&self) -> &[usize] {
        &self.dependent
    }

    /// First column with `|R[i,i]| < 1e-12 · max|R[j,j]|`, if any.
    pub fn first_deficient_column(&self) -> Option<usize> {
        let max = self
            .pivot_cols
            .iter()
            .fold(0.0f64, |m, &k| m.max(self.rdiag[k].abs()));
        self.pivot_cols
            .iter()
            .copied()
            .find(|&k| !(self.rdiag[k].abs() >= RANK_TOLERANCE * max) || max == 0.0)
    }

    /// Overwrites `y` with `Qᵀy`.
    fn apply_qt(&self, y: &mut [f64]) {
        let (m, n) = (self.rows, self.cols);
        for (p, &k) in self.pivot_cols.iter().enumerate() {
            let head = self.qr[p * n + k];
            if head == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for i in p..m {
                s += self.qr[i * n + k] * y[i];
            }
            s = -s / head;
            for i in p..m {
                y[i] += s * self.qr[i * n + k];
            }
        }
    }

    /// `R` entry in reflector row `p` and original column `j`.
    #[inline]
    fn r_entry(&self, p: usize, j: usize) -> f64 {
        let k = self.pivot_cols[p];
        if j == k {
            self.rdiag[k]
        } else {
            self.qr[p * self.cols + j]
        }
    }

    /// Least-squares solution of `A x ≈ y`; dependent columns get zero.
    pub fn solve_least_squares(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::LengthMismatch {
                op: "solve_least_squares",
                expected: self.rows,
                actual: y.len(),
            });
        }
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);

        let rank = self.pivot_cols.len();
        let mut x = vec![0.0; self.cols];
        for p in (0..rank).rev() {
            let k = self.pivot_cols[p];
            let mut s = qty[p];
            for &j in &self.pivot_cols[p + 1..] {
                s -= self.r_entry(p, j) * x[j];
            }
            x[k] = s / self.rdiag[k];
        }
        Ok(x)
    }

    /// Solves `(AᵀA) x = w` through `AᵀA = RᵀR`: `Rᵀz = w`, then `Rx = z`.
    /// Requires a full-rank factorization with no dropped columns.
    pub fn solve_normal(&self, w: &[f64]) -> Result<Vec<f64>> {
        let n = self.cols;
        if w.len() != n {
            return Err(Error::LengthMismatch {
                op: "solve_normal",
                expected: n,
                actual: w.len(),
            });
        }
        if let Some(column) = self
            .first_deficient_column()
            .or(self.dependent.first().copied())
        {
            return Err(Error::RankDeficient { column });
        }
        // Without dropped columns, pivot_cols is 0..n and R is the upper triangle.
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut s = w[i];
            for (p, zp) in z.iter().enumerate().take(i) {
                s -= self.r_entry(p, i) * zp;
            }
            z[i] = s / self.rdiag[i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.r_entry(i, j) * x[j];
            }
            x[i] = s / self.rdiag[i];
        }
        Ok(x)
    }
}

/// Result of a QR fit, including any columns pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFit {
    pub coefficients: CoefficientVector,
    pub dependent_columns: Vec<usize>,
}

/// Least-squares coefficients of `y ≈ [1 | x]·c` via Householder QR.
///
/// Fails with [`Error::RankDeficient`] when the augmented matrix is
/// numerically rank deficient.
pub fn qr_least_squares_fit(x: &DenseMatrix, y: &RealVector) -> Result<CoefficientVector> {
    qr_least_squares_fit_with(x, y, RankPolicy::Strict).map(|f| f.coefficients)
}

pub fn qr_least_squares_fit_with(
    x: &DenseMatrix,
    y: &RealVector,
    policy: RankPolicy,
) -> Result<QrFit> {
    check_fit_inputs("qr_least_squares_fit", x, y)?;
    let a = x.augment_ones();
    let qr = HouseholderQr::factor(&a, policy)?;
    if policy == RankPolicy::Strict {
        if let Some(column) = qr.first_deficient_column() {
            return Err(Error::RankDeficient { column });
        }
    }
    let coef = qr.solve_least_squares(y.as_slice())?;
    if coef.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSolution {
            op: "qr_least_squares_fit",
        });
    }
    Ok(QrFit {
        coefficients: CoefficientVector::new(coef)?,
        dependent_columns: qr.dependent.clone(),
    })
}
