//! Banded matrices and the handful of vector kernels the solvers share.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric tridiagonal matrix stored as its main and first off diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    /// Constant-coefficient matrix: `diag` on the main diagonal and `off`
    /// on both neighbours.
    pub fn toeplitz(n: usize, diag: f64, off: f64) -> Self {
        Self {
            diag: vec![diag; n],
            off: vec![off; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diag(&self) -> &[f64] {
        &self.off
    }

    /// `out = A x`
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    /// `xᵀ A y` without allocating.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = self.diag[i] * y[i];
            if i > 0 {
                row += self.off[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                row += self.off[i] * y[i + 1];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i + 1 == j {
                self.off[i]
            } else if j + 1 == i {
                self.off[j]
            } else {
                0.0
            }
        })
    }

    /// Cholesky factor `A = L Lᵀ` with `L` lower bidiagonal.
    pub fn cholesky(&self) -> Result<BidiagonalCholesky> {
        let n = self.dim();
        let mut diag = Vec::with_capacity(n);
        let mut sub = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let mut pivot = self.diag[i];
            if i > 0 {
                let l = self.off[i - 1] / diag[i - 1];
                sub.push(l);
                pivot -= l * l;
            }
            if !(pivot > 0.0) {
                return Err(Error::SingularSystem {
                    what: "tridiagonal Cholesky pivot",
                });
            }
            diag.push(pivot.sqrt());
        }
        Ok(BidiagonalCholesky { diag, sub })
    }
}

/// Lower bidiagonal Cholesky factor of a [`SymTridiagonal`] matrix.
#[derive(Debug, Clone)]
pub struct BidiagonalCholesky {
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl BidiagonalCholesky {
    pub fn pivots(&self) -> &[f64] {
        &self.diag
    }

    /// `Lᵀ x`
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i + 1 < n {
                    v += self.sub[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            if i > 0 {
                b[i] -= self.sub[i - 1] * b[i - 1];
            }
            b[i] /= self.diag[i];
        }
        self.solve_transpose_in_place(b);
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.diag.len();
        for i in (0..n).rev() {
            if i + 1 < n {
                b[i] -= self.sub[i] * b[i + 1];
            }
            b[i] /= self.diag[i];
        }
    }
}

/// General tridiagonal matrix, used for Newton Jacobians.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    /// `self += alpha * a`
    pub fn add_sym(&mut self, alpha: f64, a: &SymTridiagonal) {
        axpy(alpha, a.diag(), &mut self.diag);
        axpy(alpha, a.off_diag(), &mut self.lower);
        axpy(alpha, a.off_diag(), &mut self.upper);
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Thomas algorithm. The Jacobians solved here are dominated by the
    /// mass/Δt block, so elimination without pivoting is adequate; a
    /// vanishing pivot is still reported.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut x = rhs.to_vec();
        let mut beta = self.diag[0];
        if beta.abs() < f64::MIN_POSITIVE {
            return Err(Error::SingularSystem {
                what: "tridiagonal Jacobian",
            });
        }
        x[0] /= beta;
        for i in 1..n {
            c[i - 1] = self.upper[i - 1] / beta;
            beta = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if beta.abs() < f64::MIN_POSITIVE {
                return Err(Error::SingularSystem {
                    what: "tridiagonal Jacobian",
                });
            }
            x[i] = (x[i] - self.lower[i - 1] * x[i - 1]) / beta;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }
}

/// Extreme eigenvalues of a small symmetric matrix.
pub(crate) fn symmetric_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    eig.eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}
