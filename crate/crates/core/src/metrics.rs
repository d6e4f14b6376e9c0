//! Evaluation analytics: goodness of fit, residual histograms, coefficient
//! ranking and wall-clock timing.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::solvers::{CoefficientVector, SolverKind};

fn check_pair(op: &'static str, y_true: &[f64], y_pred: &[f64]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            op,
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty(op));
    }
    Ok(())
}

/// Elementwise `y_true - y_pred`.
pub fn residuals(y_true: &[f64], y_pred: &[f64]) -> Result<Vec<f64>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            op: "residuals",
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    Ok(y_true.iter().zip(y_pred).map(|(t, p)| t - p).collect())
}

fn sum_of_squares(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for v in values {
        acc += v * v;
    }
    acc
}

/// Mean squared error: `mean(residuals²)` summed left to right.
pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_pair("mse", y_true, y_pred)?;
    let r = residuals(y_true, y_pred)?;
    Ok(sum_of_squares(&r) / r.len() as f64)
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_pair("r2_score", y_true, y_pred)?;
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let mut ss_tot = 0.0;
    for y in y_true {
        ss_tot += (y - mean) * (y - mean);
    }
    if ss_tot == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let ss_res = sum_of_squares(&residuals(y_true, y_pred)?);
    Ok(1.0 - ss_res / ss_tot)
}

pub const DEFAULT_BINS: usize = 30;

/// Equal-width histogram. Bins are `[lo, hi)` except the last, which is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins `values` uniformly over `[min, max]`. A constant input is widened to
/// `[v − 0.5, v + 0.5]` first.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram"));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least one bin".to_string(),
        ));
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut bin_edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    bin_edges.push(hi);

    let mut counts = vec![0u64; bins];
    for &v in values {
        // Estimate, then settle against the stored edges so that assignment
        // agrees with `edges[i] <= v < edges[i+1]` exactly.
        let mut i = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        while i > 0 && v < bin_edges[i] {
            i -= 1;
        }
        while i + 1 < bins && v >= bin_edges[i + 1] {
            i += 1;
        }
        counts[i] += 1;
    }
    Ok(Histogram { bin_edges, counts })
}

/// Per-solver evaluation results.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub solver: SolverKind,
    pub train_r2: f64,
    pub test_r2: f64,
    pub mse: f64,
    pub runtime_ms: f64,
    pub coefficients: CoefficientVector,
    pub residuals_test: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopKRow {
    pub index: usize,
    pub column: String,
    /// One value per input report, in report order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopKTable {
    pub solvers: Vec<SolverKind>,
    pub reference: SolverKind,
    pub k_requested: usize,
    pub rows: Vec<TopKRow>,
}

impl TopKTable {
    pub fn k_used(&self) -> usize {
        self.rows.len()
    }

    pub fn clamped(&self) -> bool {
        self.rows.len() < self.k_requested
    }
}

/// Indices of the `k` largest magnitudes, ties to the lower index.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Compares coefficients across solvers on the `k` columns where the
/// reference solver's coefficients are largest in magnitude. `k` is clamped
/// to the coefficient count.
pub fn top_k_coefficients(
    reports: &[EvalReport],
    reference: SolverKind,
    k: usize,
) -> Result<TopKTable> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".to_string()));
    }
    let base = reports
        .iter()
        .find(|r| r.solver == reference)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("no report for reference solver {reference}"))
        })?;
    let layout = base.coefficients.layout();
    if let Some(bad) = reports.iter().find(|r| r.coefficients.layout() != layout) {
        return Err(Error::InvalidArgument(format!(
            "coefficient layout of {} differs from {reference}",
            bad.solver
        )));
    }
    let rows = top_k_indices(base.coefficients.values(), k)
        .into_iter()
        .map(|index| TopKRow {
            index,
            column: layout[index].clone(),
            values: reports
                .iter()
                .map(|r| r.coefficients.values()[index])
                .collect(),
        })
        .collect();
    Ok(TopKTable {
        solvers: reports.iter().map(|r| r.solver).collect(),
        reference,
        k_requested: k,
        rows,
    })
}

/// Runs `f` once and returns its output with the elapsed wall-clock time in
/// milliseconds, measured with a monotonic clock.
pub fn time_solver<T, F: FnOnce() -> T>(f: F) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}
