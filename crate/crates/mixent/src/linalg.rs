//! Dense row-major matrices and the small-dimension linear algebra used by
//! the mixture code: Cholesky factorization, triangular solves, and the
//! multivariate normal log-density.

use crate::error::{Error, Result};

const LN_2_PI: f64 = 1.837_877_066_409_345_5;

/// Row-major `n_rows x n_cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Matrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_row_major(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                got: data.len(),
                context: "row-major buffer length",
            });
        }
        Ok(Matrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("matrix with no rows"));
        }
        let n_cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: r.len(),
                    context: if i > 0 { "ragged row" } else { "row length" },
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            n_rows: rows.len(),
            n_cols,
            data,
        })
    }

    /// d x d matrix `s * I`.
    pub fn scaled_identity(d: usize, s: f64) -> Self {
        let mut m = Matrix::zeros(d, d);
        for j in 0..d {
            m.set(j, j, s);
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Select rows by index (duplicates allowed), e.g. for resampling.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            n_rows: indices.len(),
            n_cols: self.n_cols,
            data,
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// or `None` when the factorization breaks down.
pub fn cholesky_lower(a: &Matrix) -> Option<Matrix> {
    let d = a.n_rows();
    if d != a.n_cols() {
        return None;
    }
    let mut l = Matrix::zeros(d, d);
    for j in 0..d {
        for i in j..d {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l.set(j, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    l.is_finite().then_some(l)
}

/// Solve `L y = v` in place for lower-triangular `L`.
#[inline]
pub(crate) fn forward_substitute(l: &Matrix, v: &mut [f64]) {
    let d = l.n_rows();
    for i in 0..d {
        let mut s = v[i];
        let li = l.row(i);
        for (k, vk) in v.iter().enumerate().take(i) {
            s -= li[k] * vk;
        }
        v[i] = s / li[i];
    }
}

/// `log phi(x; mean, cov)` for a symmetric positive definite covariance,
/// computed through the Cholesky factor.
pub fn mvn_logpdf(x: &[f64], mean: &[f64], cov: &Matrix) -> Result<f64> {
    let d = mean.len();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
            context: "point vs mean length",
        });
    }
    if cov.n_rows() != d || cov.n_cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cov.n_rows(),
            context: "covariance order",
        });
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let scale = 1.0 + cov.get(i, i).abs().max(cov.get(j, j).abs());
            if (cov.get(i, j) - cov.get(j, i)).abs() > 1e-8 * scale {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    let l = cholesky_lower(cov).ok_or(Error::NotPositiveDefinite)?;
    let mut y: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    forward_substitute(&l, &mut y);
    let quad: f64 = y.iter().map(|v| v * v).sum();
    let half_log_det: f64 = (0..d).map(|j| l.get(j, j).ln()).sum();
    Ok(-0.5 * d as f64 * LN_2_PI - half_log_det - 0.5 * quad)
}
