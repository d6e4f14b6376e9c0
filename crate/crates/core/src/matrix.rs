//! Row-major dense matrices and vectors.
//!
//! Every reduction (dot products, matrix products, Gram matrices) accumulates
//! in ascending index order starting from `0.0`, so results are bitwise
//! reproducible across runs and platforms.

use std::fmt;

use crate::error::{Error, Result};

/// Left-to-right dot product of two equally long slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// A real matrix stored row by row: entry `(i, j)` lives at `data[i * cols + j]`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                op: "DenseMatrix::new",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    op: "DenseMatrix::from_rows",
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        DenseMatrix::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Crate-internal constructor for results of arithmetic on finite inputs.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Standard matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(self.mismatch("matmul", rhs));
        }
        let (m, n) = (self.rows, rhs.cols);
        let mut out = vec![0.0; m * n];
        // i-k-j order keeps each output entry accumulating in ascending k.
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a_ik = self.data[i * self.cols + k];
                let rhs_row = rhs.row(k);
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a_ik * b;
                }
            }
        }
        Ok(DenseMatrix::from_raw(m, n, out))
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix::from_raw(self.cols, self.rows, out)
    }

    /// `AᵀA`, with entry `(i, j)` equal to the left-to-right dot product of
    /// columns `i` and `j`. The result is exactly symmetric.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let columns: Vec<Vec<f64>> = (0..n).map(|j| self.column(j)).collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(&columns[i], &columns[j]);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        DenseMatrix::from_raw(n, n, out)
    }

    /// `Aᵀv`, accumulating over rows in ascending order.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::LengthMismatch {
                op: "transpose_mul_vec",
                expected: self.rows,
                actual: v.len(),
            });
        }
        Ok((0..self.cols)
            .map(|j| {
                let mut acc = 0.0;
                for (i, vi) in v.iter().enumerate() {
                    acc += self.get(i, j) * vi;
                }
                acc
            })
            .collect())
    }

    /// `Av` as one left-to-right dot product per row.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::LengthMismatch {
                op: "mul_vec",
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Prepends a column of ones (the intercept column).
    pub fn augment_ones(&self) -> DenseMatrix {
        let cols = self.cols + 1;
        let mut out = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            out.push(1.0);
            out.extend_from_slice(self.row(i));
        }
        DenseMatrix::from_raw(self.rows, cols, out)
    }

    /// Copies the listed rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix {
        let mut out = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            out.extend_from_slice(self.row(i));
        }
        DenseMatrix::from_raw(indices.len(), self.cols, out)
    }

    /// Copy of the matrix without column `j`.
    pub fn drop_column(&self, j: usize) -> Result<DenseMatrix> {
        if j >= self.cols {
            return Err(Error::InvalidArgument(format!(
                "column {j} out of range for {} columns",
                self.cols
            )));
        }
        let mut out = Vec::with_capacity(self.rows * (self.cols - 1));
        for i in 0..self.rows {
            let row = self.row(i);
            out.extend_from_slice(&row[..j]);
            out.extend_from_slice(&row[j + 1..]);
        }
        Ok(DenseMatrix::from_raw(self.rows, self.cols - 1, out))
    }

    pub fn scale(&self, c: f64) -> DenseMatrix {
        DenseMatrix::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * c).collect(),
        )
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != rhs.shape() {
            return Err(self.mismatch("sub", rhs));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix::from_raw(self.rows, self.cols, data))
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn mismatch(&self, op: &'static str, rhs: &DenseMatrix) -> Error {
        Error::DimensionMismatch {
            op,
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: rhs.rows,
            right_cols: rhs.cols,
        }
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// A vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        check_finite(&data)?;
        Ok(RealVector(data))
    }

    pub fn zeros(len: usize) -> Self {
        RealVector(vec![0.0; len])
    }

    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        RealVector(data)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn select(&self, indices: &[usize]) -> RealVector {
        RealVector(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }
}

impl std::ops::Index<usize> for RealVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
