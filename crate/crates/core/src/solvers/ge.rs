//! Gaussian elimination with partial pivoting, applied to the augmented
//! regression system `[1 | X | y]`.
//!
//! Two quirks are kept deliberately:
//!
//! - The pivot search scans every remaining row of the tall `m × (n+1)`
//!   system, but back substitution only uses the first `n` rows. The result
//!   solves the `n`-equation subsystem picked out by pivoting, not the
//!   least-squares problem.
//! - A pivot smaller than `reg_factor` is nudged by `±reg_factor` in place,
//!   and the same amount is added a second time in the elimination
//!   denominator.

use super::{check_fit_inputs, CoefficientVector};
use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix, RealVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeConfig {
    reg_factor: f64,
}

impl GeConfig {
    pub const DEFAULT_REG_FACTOR: f64 = 1e-10;

    pub fn new(reg_factor: f64) -> Result<Self> {
        if !(reg_factor > 0.0) || !reg_factor.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "reg_factor must be positive and finite, got {reg_factor}"
            )));
        }
        Ok(GeConfig { reg_factor })
    }

    pub fn reg_factor(&self) -> f64 {
        self.reg_factor
    }
}

impl Default for GeConfig {
    fn default() -> Self {
        GeConfig {
            reg_factor: Self::DEFAULT_REG_FACTOR,
        }
    }
}

/// Row-major working array for the augmented system.
struct Augmented {
    data: Vec<f64>,
    rows: usize,
    width: usize,
}

impl Augmented {
    fn build(x: &DenseMatrix, y: &RealVector) -> Self {
        let width = x.cols() + 2;
        let mut data = Vec::with_capacity(x.rows() * width);
        for i in 0..x.rows() {
            data.push(1.0);
            data.extend_from_slice(x.row(i));
            data.push(y[i]);
        }
        Augmented {
            data,
            rows: x.rows(),
            width,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.width + j]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.width {
            self.data.swap(a * self.width + j, b * self.width + j);
        }
    }

    /// Forward elimination over the first `n` columns.
    fn eliminate(&mut self, n: usize, reg_factor: f64) {
        for i in 0..n {
            // First index of the largest magnitude, like argmax.
            let mut max_row = i;
            let mut best = self.at(i, i).abs();
            for k in i + 1..self.rows {
                let v = self.at(k, i).abs();
                if v > best {
                    best = v;
                    max_row = k;
                }
            }
            let pivot = self.at(max_row, i);
            let regularization = if pivot.abs() < reg_factor {
                let r = if pivot >= 0.0 {
                    reg_factor
                } else {
                    -reg_factor
                };
                *self.at_mut(max_row, i) += r;
                r
            } else {
                0.0
            };
            self.swap_rows(i, max_row);

            for k in i + 1..self.rows {
                let factor = self.at(k, i) / (self.at(i, i) + regularization);
                for j in i..self.width {
                    let delta = factor * self.at(i, j);
                    *self.at_mut(k, j) -= delta;
                }
            }
        }
    }

    /// Back substitution on the leading `n × n` block against the last column.
    fn back_substitute(&self, n: usize, reg_factor: f64) -> Result<Vec<f64>> {
        let rhs = self.width - 1;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let diag = self.at(i, i);
            if diag.abs() < reg_factor {
                return Err(Error::PivotTooSmall { row: i });
            }
            let row = &self.data[i * self.width..(i + 1) * self.width];
            x[i] = (row[rhs] - dot(&row[i + 1..n], &x[i + 1..])) / diag;
        }
        Ok(x)
    }
}

/// Fits `y ≈ [1 | x]·c` by Gaussian elimination with partial pivoting.
///
/// See the module docs: the returned coefficients solve the pivot-selected
/// square subsystem, so on noisy overdetermined data they differ from the
/// least-squares fit.
pub fn ge_partial_pivot_fit(
    x: &DenseMatrix,
    y: &RealVector,
    cfg: GeConfig,
) -> Result<CoefficientVector> {
    check_fit_inputs("ge_partial_pivot_fit", x, y)?;
    let n = x.cols() + 1;
    let mut a = Augmented::build(x, y);
    a.eliminate(n, cfg.reg_factor);
    let coef = a.back_substitute(n, cfg.reg_factor)?;
    if coef.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSolution {
            op: "ge_partial_pivot_fit",
        });
    }
    CoefficientVector::new(coef)
}
