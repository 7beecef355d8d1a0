//! Dense symmetric matrices small enough for textbook algorithms.

use alloc::vec::Vec;

use crate::math::{ln, sqrt};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![0.0; n * n],
        }
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `(A + Aᵀ) / 2`
    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in i + 1..self.n {
                let m = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, m);
                self.set(j, i, m);
            }
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }

    /// `ln det A` via Cholesky; `None` unless `A` is numerically positive
    /// definite. The empty matrix has determinant 1.
    pub fn ln_det_spd(&self) -> Option<f64> {
        let n = self.n;
        let mut l = alloc::vec![0.0; n * n];
        let mut ln_det = 0.0;
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !d.is_finite() || d <= 0.0 {
                return None;
            }
            let djj = sqrt(d);
            l[j * n + j] = djj;
            ln_det += 2.0 * ln(djj);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(ln_det)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ln_det_of_known_matrix() {
        let a = SquareMatrix::from_rows(2, vec![4.0, 2.0, 2.0, 3.0]);
        assert!((a.ln_det_spd().unwrap() - libm::log(8.0)).abs() < 1e-14);
        assert_eq!(SquareMatrix::zeros(0).ln_det_spd(), Some(0.0));
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = SquareMatrix::from_rows(2, vec![1.0, 2.0, 2.0, 1.0]);
        assert_eq!(a.ln_det_spd(), None);
    }
}
