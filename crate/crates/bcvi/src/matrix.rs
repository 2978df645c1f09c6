//! Minimal dense row-major matrix plus the distance helpers used everywhere.
//!
//! Deliberately tiny: the crate only ever needs "n points in p dimensions"
//! with cheap row access, so a full linear-algebra dependency would be dead
//! weight.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build from flat row-major storage. `data.len()` must be `rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidDataset(format!(
                "matrix storage has {} values, expected {} ({rows} x {cols})",
                data.len(),
                rows * cols,
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidDataset(format!(
                    "row {} has {} values, expected {cols}",
                    i + 1,
                    row.len(),
                )));
            }
        }
        let data = rows.iter().flatten().copied().collect();
        Matrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Borrow row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    /// Mean of all rows; the "global centroid" of a point set.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.rows as f64;
        for m in &mut mean {
            *m /= n;
        }
        mean
    }

    /// True if every stored value is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Squared Euclidean distance between two points.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Euclidean distance between two points.
#[inline]
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Minkowski distance of order `t` between two points.
pub fn minkowski_distance(a: &[f64], b: &[f64], t: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += (x - y).abs().powf(t);
    }
    acc.powf(1.0 / t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_access_and_mean() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]]).unwrap();
        assert_eq!(m.rows(), 3);
        assert_eq!(m.cols(), 2);
        assert_eq!(m.row(1), &[2.0, 3.0]);
        assert_eq!(m.mean_row(), vec![2.0, 3.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = Matrix::from_rows(&[vec![0.0], vec![1.0, 2.0]]).unwrap_err();
        assert!(err.to_string().contains("row 2"), "unexpected message: {err}");
    }

    #[test]
    fn distances() {
        let a = [0.0, 0.0];
        let b = [3.0, 4.0];
        assert_eq!(squared_distance(&a, &b), 25.0);
        assert_eq!(euclidean_distance(&a, &b), 5.0);
        // Order-2 Minkowski is Euclidean.
        assert!((minkowski_distance(&a, &b, 2.0) - 5.0).abs() < 1e-12);
        // Order-1 is Manhattan.
        assert!((minkowski_distance(&a, &b, 1.0) - 7.0).abs() < 1e-12);
    }
}
