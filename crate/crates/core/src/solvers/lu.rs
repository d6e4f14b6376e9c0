//! Doolittle LU without row exchanges, triangular solves, and the
//! normal-equations fit built on them.

use super::{check_fit_inputs, CoefficientVector};
use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix, RealVector};

/// `A = L·U` with `L` unit lower triangular and `U` upper triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors {
    pub l: DenseMatrix,
    pub u: DenseMatrix,
}

/// Doolittle elimination in `k, i, j` order with no pivoting.
///
/// Fails with [`Error::SingularPivot`] when a pivot `U[k,k]` (for `k < n-1`)
/// is zero or the multiplier it produces is not finite. A zero in the last
/// diagonal position is left for [`backward_substitution`] to report.
pub fn lu_decompose_no_pivot(a: &DenseMatrix) -> Result<LuFactors> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            op: "lu_decompose_no_pivot",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: a.cols(),
            right_cols: a.rows(),
        });
    }
    let n = a.rows();
    let mut l = DenseMatrix::identity(n).into_vec();
    let mut u = a.as_slice().to_vec();

    for k in 0..n.saturating_sub(1) {
        let pivot = u[k * n + k];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularPivot { column: k });
        }
        for i in k + 1..n {
            let factor = u[i * n + k] / pivot;
            if !factor.is_finite() {
                return Err(Error::SingularPivot { column: k });
            }
            l[i * n + k] = factor;
            for j in k + 1..n {
                u[i * n + j] -= factor * u[k * n + j];
            }
            u[i * n + k] = 0.0;
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        let column = (0..n).find(|&k| !u[k * n + k].is_finite()).unwrap_or(n - 1);
        return Err(Error::SingularPivot { column });
    }
    Ok(LuFactors {
        l: DenseMatrix::from_raw(n, n, l),
        u: DenseMatrix::from_raw(n, n, u),
    })
}

fn check_triangular_inputs(op: &'static str, m: &DenseMatrix, rhs: &RealVector) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            op,
            left_rows: m.rows(),
            left_cols: m.cols(),
            right_rows: rhs.len(),
            right_cols: 1,
        });
    }
    if rhs.len() != m.rows() {
        return Err(Error::LengthMismatch {
            op,
            expected: m.rows(),
            actual: rhs.len(),
        });
    }
    Ok(())
}

/// Solves `L·y = b` top-down for unit lower triangular `L`.
pub fn forward_substitution(l: &DenseMatrix, b: &RealVector) -> Result<RealVector> {
    check_triangular_inputs("forward_substitution", l, b)?;
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = b[i] - dot(&l.row(i)[..i], &y[..i]);
    }
    Ok(RealVector::from_raw(y))
}

/// Solves `U·x = y` bottom-up; a zero diagonal entry is a singular pivot.
pub fn backward_substitution(u: &DenseMatrix, y: &RealVector) -> Result<RealVector> {
    check_triangular_inputs("backward_substitution", u, y)?;
    let n = u.rows();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let diag = u.get(i, i);
        if diag == 0.0 {
            return Err(Error::SingularPivot { column: i });
        }
        x[i] = (y[i] - dot(&u.row(i)[i + 1..], &x[i + 1..])) / diag;
    }
    Ok(RealVector::from_raw(x))
}

/// Solves the normal equations `(AᵀA) c = Aᵀy` for `A = [1 | x]` with
/// no-pivot LU plus forward and backward substitution.
pub fn lu_normal_fit(x: &DenseMatrix, y: &RealVector) -> Result<CoefficientVector> {
    check_fit_inputs("lu_normal_fit", x, y)?;
    let a = x.augment_ones();
    let ata = a.gram();
    let atb = RealVector::from_raw(a.transpose_mul_vec(y.as_slice())?);
    let LuFactors { l, u } = lu_decompose_no_pivot(&ata)?;
    let z = forward_substitution(&l, &atb)?;
    let c = backward_substitution(&u, &z)?;
    if c.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSolution {
            op: "lu_normal_fit",
        });
    }
    CoefficientVector::new(c.into_vec())
}
