//! The three regression solvers and the condition-number estimator.
//!
//! All solvers fit `y ≈ A·c` where `A` is the feature matrix with a leading
//! column of ones, so coefficient index 0 is always the intercept.

mod condition;
mod ge;
mod lu;
mod qr;

use std::fmt;
use std::str::FromStr;

pub use condition::{condition_number, CONDITION_MAX_ITERATIONS, CONDITION_REL_TOL};
pub use ge::{ge_partial_pivot_fit, GeConfig};
pub use lu::{
    backward_substitution, forward_substitution, lu_decompose_no_pivot, lu_normal_fit, LuFactors,
};
pub use qr::{
    qr_least_squares_fit, qr_least_squares_fit_with, HouseholderQr, QrFit, RankPolicy,
    RANK_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, RealVector};

pub const INTERCEPT_NAME: &str = "intercept";

/// Fitted coefficients together with the name of the column each one
/// multiplies. Index 0 is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    values: RealVector,
    layout: Vec<String>,
}

impl CoefficientVector {
    /// Wraps raw solver output, naming features `x1, x2, ...`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("CoefficientVector"));
        }
        let layout = std::iter::once(INTERCEPT_NAME.to_string())
            .chain((1..values.len()).map(|i| format!("x{i}")))
            .collect();
        Ok(CoefficientVector {
            values: RealVector::new(values)?,
            layout,
        })
    }

    /// Replaces the generic feature names with `feature_names` (intercept excluded).
    pub fn with_feature_names<S: AsRef<str>>(mut self, feature_names: &[S]) -> Result<Self> {
        if feature_names.len() + 1 != self.values.len() {
            return Err(Error::LengthMismatch {
                op: "with_feature_names",
                expected: self.values.len() - 1,
                actual: feature_names.len(),
            });
        }
        self.layout = std::iter::once(INTERCEPT_NAME.to_string())
            .chain(feature_names.iter().map(|s| s.as_ref().to_string()))
            .collect();
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn layout(&self) -> &[String] {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn intercept(&self) -> f64 {
        self.values[0]
    }
}

/// `augment_ones(x) · coef`, one left-to-right dot product per row.
pub fn predict(coef: &CoefficientVector, x: &DenseMatrix) -> Result<RealVector> {
    if x.cols() + 1 != coef.len() {
        return Err(Error::LengthMismatch {
            op: "predict",
            expected: coef.len(),
            actual: x.cols() + 1,
        });
    }
    let c = coef.values();
    let out = (0..x.rows())
        .map(|i| {
            // Same accumulation order as dot([1, x_i], c).
            let mut acc = 0.0;
            acc += c[0];
            for (xv, cv) in x.row(i).iter().zip(&c[1..]) {
                acc += xv * cv;
            }
            acc
        })
        .collect::<Vec<_>>();
    RealVector::new(out).map_err(|_| Error::NonFiniteSolution { op: "predict" })
}

pub(crate) fn check_fit_inputs(op: &'static str, x: &DenseMatrix, y: &RealVector) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::LengthMismatch {
            op,
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if x.rows() < x.cols() + 1 {
        return Err(Error::InsufficientRows {
            op,
            rows: x.rows(),
            cols: x.cols() + 1,
        });
    }
    Ok(())
}

/// The solvers compared by the tooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    /// Householder QR least squares; the reference.
    Qr,
    /// Gaussian elimination with partial pivoting and pivot regularization.
    Ge,
    /// No-pivot LU on the normal equations.
    Lu,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Qr, SolverKind::Ge, SolverKind::Lu];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Qr => "qr",
            SolverKind::Ge => "ge",
            SolverKind::Lu => "lu",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qr" => Ok(SolverKind::Qr),
            "ge" => Ok(SolverKind::Ge),
            "lu" => Ok(SolverKind::Lu),
            other => Err(Error::InvalidArgument(format!("unknown solver {other:?}"))),
        }
    }
}

/// Knobs shared by [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub ge: GeConfig,
    pub qr_rank_policy: RankPolicy,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            ge: GeConfig::default(),
            qr_rank_policy: RankPolicy::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub coefficients: CoefficientVector,
    /// Augmented-matrix columns the QR solver pinned to zero as linearly
    /// dependent. Always empty for the other solvers.
    pub dependent_columns: Vec<usize>,
}

/// Runs one solver on `(x, y)`.
pub fn fit(
    kind: SolverKind,
    x: &DenseMatrix,
    y: &RealVector,
    opts: &SolverOptions,
) -> Result<FitOutcome> {
    match kind {
        SolverKind::Qr => {
            let QrFit {
                coefficients,
                dependent_columns,
            } = qr_least_squares_fit_with(x, y, opts.qr_rank_policy)?;
            Ok(FitOutcome {
                coefficients,
                dependent_columns,
            })
        }
        SolverKind::Ge => Ok(FitOutcome {
            coefficients: ge_partial_pivot_fit(x, y, opts.ge)?,
            dependent_columns: Vec::new(),
        }),
        SolverKind::Lu => Ok(FitOutcome {
            coefficients: lu_normal_fit(x, y)?,
            dependent_columns: Vec::new(),
        }),
    }
}
