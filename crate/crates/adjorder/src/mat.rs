//! Minimal row-major matrix used for the class map and interaction matrices.
//!
//! The matrices in this crate are small (at most `classes x dim`), so a flat
//! `Vec<f64>` with explicit indexing is all that is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from nested rows. Every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in &rows {
            if row.len() != n_cols {
                return Err(Error::DimMismatch {
                    expected: n_cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Mat {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    /// Square matrix with ones strictly above the diagonal, zeros elsewhere.
    /// Encodes a total order where class `i` precedes every class `j > i`.
    pub fn off_upper_triangular(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                m.set(i, j, 1.0);
            }
        }
        m
    }

    /// Square matrix with ones strictly below the diagonal, zeros elsewhere.
    /// The mirror order used for postnominal adjectives.
    pub fn off_lower_triangular(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                m.set(i, j, 1.0);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn add_assign_at(&mut self, i: usize, j: usize, delta: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] += delta;
    }

    /// Borrow row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Matrix-vector product; `v` must have `cols` entries.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Copy out as nested rows (used by the model file format).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `self += scale * other`, shapes must match.
    pub fn axpy(&mut self, scale: f64, other: &Mat) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    /// Flat view of the underlying data, row-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mutable flat view, row-major.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}
