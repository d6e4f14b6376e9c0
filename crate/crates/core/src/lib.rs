//! Dense least-squares toolkit for comparing regression solvers on
//! town-level real-estate data.
//!
//! The crate is organised bottom-up:
//!
//! - [`matrix`]: row-major dense matrices and vectors with a fixed summation order.
//! - [`solvers`]: Householder QR least squares, Gaussian elimination with partial
//!   pivoting, LU on the normal equations, and a condition-number estimator.
//! - [`features`]: one-hot encoding, design-matrix assembly and seeded splits.
//! - [`pipeline`]: rate aggregation, merging, town-year grouping, mortgage math
//!   and buy labeling.
//! - [`metrics`]: R², MSE, residual histograms, coefficient ranking and timing.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod features;
pub mod format;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod solvers;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, RealVector};
