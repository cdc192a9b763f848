//! Dense row-major matrix over a [`Real`] scalar.
//!
//! Spectrograms, filterbanks, images, and model weights are all small dense
//! matrices; this type keeps them in one flat buffer with explicit shape.

use crate::error::{Error, Result};
use crate::real::Real;

/// Dense 2-D matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Constant-filled matrix.
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Mat {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Build from a closure over `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    /// Wrap an existing row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{cols} = {} elements", rows * cols),
                actual: format!("{} elements", data.len()),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `(rows, cols)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, r: usize, c: usize) -> T {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    /// Row `r` as a slice.
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Flat row-major view of the whole buffer.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Consume into the flat buffer.
    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Elementwise map.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self * other`, erroring on inner-dimension mismatch.
    pub fn matmul(&self, other: &Mat<T>) -> Result<Mat<T>> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: format!("inner dimension {}", self.cols),
                actual: format!("{}x{}", other.rows, other.cols),
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let lhs = self.row(r);
            let dst = out.row_mut(r);
            for (k, &l) in lhs.iter().enumerate() {
                if l == T::zero() {
                    continue;
                }
                let rhs = other.row(k);
                for (d, &x) in dst.iter_mut().zip(rhs.iter()) {
                    *d = *d + l * x;
                }
            }
        }
        Ok(out)
    }

    /// Minimum entry; `None` for an empty matrix.
    pub fn min(&self) -> Option<T> {
        self.data.iter().copied().reduce(|a, b| if b < a { b } else { a })
    }

    /// Maximum entry; `None` for an empty matrix.
    pub fn max(&self) -> Option<T> {
        self.data.iter().copied().reduce(|a, b| if b > a { b } else { a })
    }

    /// Mean over all entries.
    pub fn mean(&self) -> T {
        if self.data.is_empty() {
            return T::zero();
        }
        self.data.iter().copied().sum::<T>() / T::from_usize(self.data.len()).unwrap()
    }

    /// True if every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Bilinear resize with corner alignment.
    ///
    /// Output extrema never exceed input extrema (each output value is a
    /// convex combination of input values). A single-row or single-column
    /// output samples the input center along that axis.
    pub fn resize_bilinear(&self, out_rows: usize, out_cols: usize) -> Mat<T> {
        assert!(!self.is_empty(), "cannot resize an empty matrix");
        let src_pos = |out_i: usize, out_n: usize, in_n: usize| -> T {
            if out_n <= 1 || in_n <= 1 {
                // Degenerate axis: sample the center.
                T::from_usize(in_n - 1).unwrap() / T::from_f64_c(2.0)
            } else {
                T::from_usize(out_i).unwrap() * T::from_usize(in_n - 1).unwrap()
                    / T::from_usize(out_n - 1).unwrap()
            }
        };
        Mat::from_fn(out_rows, out_cols, |r, c| {
            let y = src_pos(r, out_rows, self.rows);
            let x = src_pos(c, out_cols, self.cols);
            let y0 = y.floor().to_usize().unwrap().min(self.rows - 1);
            let x0 = x.floor().to_usize().unwrap().min(self.cols - 1);
            let y1 = (y0 + 1).min(self.rows - 1);
            let x1 = (x0 + 1).min(self.cols - 1);
            let fy = y - T::from_usize(y0).unwrap();
            let fx = x - T::from_usize(x0).unwrap();
            let one = T::one();
            self.at(y0, x0) * (one - fy) * (one - fx)
                + self.at(y0, x1) * (one - fy) * fx
                + self.at(y1, x0) * fy * (one - fx)
                + self.at(y1, x1) * fy * fx
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Mat::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.as_slice(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = Mat::<f64>::zeros(2, 3);
        let b = Mat::<f64>::zeros(2, 2);
        assert!(a.matmul(&b).is_err());
    }

    #[test]
    fn resize_constant_stays_constant() {
        let m = Mat::filled(5, 7, 0.37f64);
        let r = m.resize_bilinear(224, 224);
        assert_eq!(r.shape(), (224, 224));
        for &v in r.as_slice() {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn resize_2x2_to_3x3_center() {
        let m = Mat::from_vec(2, 2, vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        let r = m.resize_bilinear(3, 3);
        assert!((r.at(1, 1) - 1.0f64).abs() < 1e-12);
        // Corners align exactly.
        assert_eq!(r.at(0, 0), 0.0);
        assert_eq!(r.at(2, 2), 2.0);
    }

    #[test]
    fn resize_logmel_shape_to_network_input() {
        let m = Mat::from_fn(64, 94, |r, c| ((r + c) % 11) as f64 * 0.3 - 1.0);
        let r = m.resize_bilinear(224, 224);
        assert_eq!(r.shape(), (224, 224));
    }

    #[test]
    fn resize_bounds_within_input_range() {
        let m = Mat::from_fn(13, 9, |r, c| ((r * 31 + c * 17) % 97) as f64 / 97.0);
        let (lo, hi) = (m.min().unwrap(), m.max().unwrap());
        let r = m.resize_bilinear(40, 3);
        assert!(r.min().unwrap() >= lo - 1e-12);
        assert!(r.max().unwrap() <= hi + 1e-12);
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Mat::from_vec(2, 2, vec![0.0f64; 3]).is_err());
    }
}
