//! Dense real square matrices.
//!
//! Products and powers are computed directly on a row-major buffer. The
//! spectral norm and spectral radius go through nalgebra's SVD and real
//! Schur decomposition.

use std::fmt;
use std::ops::{Index, Sub};

use nalgebra as na;

use crate::error::{Error, Result};

/// Iteration cap handed to the nalgebra SVD and Schur routines.
const MAX_ITERATIONS: usize = 10_000;

/// A dense `dim x dim` real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from a row-major buffer of length `dim * dim`.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::NotSquare {
                rows: dim,
                expected: dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    expected: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let dim = entries.len();
        let mut data = vec![0.0; dim * dim];
        for (i, &v) in entries.iter().enumerate() {
            data[i * dim + i] = v;
        }
        Self::new(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    fn check_same_dim(&self, other: &Matrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_same_dim(rhs)?;
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * d..(k + 1) * d];
                let out_row = &mut out[i * d..(i + 1) * d];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix { dim: d, data: out })
    }

    /// `self^k` by iterated multiplication; `self^0` is the identity.
    pub fn pow(&self, k: u32) -> Matrix {
        let mut acc = Matrix::identity(self.dim);
        for _ in 0..k {
            acc = acc.mul(self).expect("same dimension");
        }
        acc
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: x.len(),
            });
        }
        Ok(self
            .data
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn to_nalgebra(&self) -> na::DMatrix<f64> {
        na::DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::NonFinite {
                row: pos / self.dim,
                col: pos % self.dim,
            }),
            None => Ok(()),
        }
    }

    /// Induced Euclidean norm, i.e. the largest singular value.
    pub fn spectral_norm(&self) -> Result<f64> {
        self.check_finite()?;
        if self.dim == 1 {
            return Ok(self.data[0].abs());
        }
        let svd = na::linalg::SVD::try_new(
            self.to_nalgebra(),
            false,
            false,
            f64::EPSILON,
            MAX_ITERATIONS,
        )
        .ok_or_else(|| Error::NoConvergence {
            routine: "SVD",
            label: format!("{self:?}"),
        })?;
        Ok(svd.singular_values.iter().fold(0.0, |m: f64, s| m.max(*s)))
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> Result<f64> {
        self.check_finite()?;
        if self.dim == 1 {
            return Ok(self.data[0].abs());
        }
        let schur = na::linalg::Schur::try_new(self.to_nalgebra(), f64::EPSILON, MAX_ITERATIONS)
            .ok_or_else(|| Error::NoConvergence {
                routine: "Schur decomposition",
                label: format!("{self:?}"),
            })?;
        Ok(schur
            .complex_eigenvalues()
            .iter()
            .fold(0.0, |m: f64, z| m.max(z.norm())))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (row, col): (usize, usize)) -> &f64 {
        &self.data[row * self.dim + col]
    }
}

impl Sub for &Matrix {
    type Output = Result<Matrix>;

    fn sub(self, rhs: &Matrix) -> Result<Matrix> {
        self.check_same_dim(rhs)?;
        Ok(Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.dim)).finish()
    }
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.mul(b)
}

pub fn mat_pow(a: &Matrix, k: u32) -> Matrix {
    a.pow(k)
}

pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    a.spectral_norm()
}

pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    a.spectral_radius()
}

/// `a^p b^q - b^q a^p`.
pub fn commutator(a: &Matrix, p: u32, b: &Matrix, q: u32) -> Result<Matrix> {
    a.check_same_dim(b)?;
    if p == 0 || q == 0 {
        return Err(Error::InvalidArgument(format!(
            "commutator exponents must be positive, got p = {p}, q = {q}"
        )));
    }
    let ap = a.pow(p);
    let bq = b.pow(q);
    &ap.mul(&bq)? - &bq.mul(&ap)?
}
