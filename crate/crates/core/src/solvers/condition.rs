//! Two-norm condition number estimate `κ₂(A) = σmax / σmin`.
//!
//! `σmax²` and `σmin²` are the extreme eigenvalues of `AᵀA`. The largest comes
//! from power iteration, the smallest from inverse iteration whose solves go
//! through the Householder factor of `A` (`AᵀA = RᵀR`) so that `AᵀA` is never
//! formed or factored without pivoting.

use super::qr::{HouseholderQr, RankPolicy};
use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};

/// Relative eigenvalue change at which both iterations stop.
pub const CONDITION_REL_TOL: f64 = 1e-10;
/// Iteration cap for each of the two iterations.
pub const CONDITION_MAX_ITERATIONS: usize = 10_000;

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i + 1) as f64).sin()).collect();
    normalize(&mut v);
    v
}

/// Iterates `v ← step(v)` and returns the converged Rayleigh-type estimate.
/// `step` returns the new unnormalized vector and the estimate for the
/// current unit vector.
fn iterate<F>(n: usize, mut step: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, f64)>,
{
    let mut v = start_vector(n);
    let mut previous = f64::NAN;
    let mut estimate = 0.0;
    for _ in 0..CONDITION_MAX_ITERATIONS {
        let (mut next, value) = step(&v)?;
        estimate = value;
        if (estimate - previous).abs() < CONDITION_REL_TOL * estimate.abs() {
            break;
        }
        previous = estimate;
        if normalize(&mut next) == 0.0 {
            break;
        }
        v = next;
    }
    Ok(estimate)
}

/// Estimates `κ₂(a)`. Returns `f64::INFINITY` when the Householder factor of
/// `a` is numerically singular (`|R[i,i]| < 1e-12 · max|R[j,j]|`).
pub fn condition_number(a: &DenseMatrix) -> Result<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::Empty("condition_number"));
    }
    if m < n {
        return Err(Error::InsufficientRows {
            op: "condition_number",
            rows: m,
            cols: n,
        });
    }
    let qr = HouseholderQr::factor(a, RankPolicy::Strict)?;
    if qr.first_deficient_column().is_some() {
        return Ok(f64::INFINITY);
    }

    // λmax: ‖A v‖² is the Rayleigh quotient of AᵀA at unit v.
    let lambda_max = iterate(n, |v| {
        let av = a.mul_vec(v)?;
        let rq = dot(&av, &av);
        Ok((a.transpose_mul_vec(&av)?, rq))
    })?;

    // 1/λmin: vᵀ(AᵀA)⁻¹v is the Rayleigh quotient of the inverse at unit v.
    let inv_lambda_min = match iterate(n, |v| {
        let w = qr.solve_normal(v)?;
        let rq = dot(v, &w);
        Ok((w, rq))
    }) {
        Ok(x) => x,
        Err(Error::RankDeficient { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };

    if !(inv_lambda_min > 0.0) || !inv_lambda_min.is_finite() {
        return Ok(f64::INFINITY);
    }
    let kappa = (lambda_max * inv_lambda_min).sqrt();
    Ok(if kappa.is_finite() {
        kappa
    } else {
        f64::INFINITY
    })
}
