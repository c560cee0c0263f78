//! Small dense symmetric matrices. The coloring estimator works in `q - 1`
//! dimensions, so everything here is sized for a handful of rows.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds from row-major data, symmetrizing `(A + A^T) / 2`.
    pub fn from_row_major(dim: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), dim * dim);
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = 0.5 * (data[i * dim + j] + data[j * dim + i]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    /// `self += scale * (diag(v) - v v^T)`.
    pub fn add_covariance_term(&mut self, v: &[f64], scale: f64) {
        debug_assert_eq!(v.len(), self.dim);
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i] += scale * v[i];
            for j in 0..n {
                self.data[i * n + j] -= scale * v[i] * v[j];
            }
        }
    }

    pub fn add_to_diagonal(&mut self, value: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += value;
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += x[i] * self.data[i * n + j] * x[j];
            }
        }
        acc
    }

    /// Principal submatrix on the given index set.
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        let k = idx.len();
        let mut m = SymMatrix::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m.data[a * k + b] = self.get(i, j);
            }
        }
        m
    }

    /// Solves `self * x = rhs` by Cholesky; `None` if the matrix is not
    /// numerically positive definite.
    pub fn cholesky_solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = sqrt(s);
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Some(x)
    }

    /// All eigenvalues, ascending, by cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = self.data.clone();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
            let scale: f64 = a.iter().map(|v| v * v).sum();
            if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                    let c = 1.0 / sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::INFINITY)
    }
}
