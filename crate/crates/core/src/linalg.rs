//! Dense d×d matrices and d-vectors for d ≤ 3, stored inline.

use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};


// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector {
    dim: usize,
    data: [f64; MAX_DIM],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: [[f64; MAX_DIM]; MAX_DIM],
}

fn check_dim(dim: usize) {
    assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim);
        Self { dim, data: [0.0; MAX_DIM] }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut v = Self::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[axis] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, factor: f64) -> Vector {
        let mut out = *self;
        out.data.iter_mut().for_each(|x| *x *= factor);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[..self.dim][i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(mut self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] += rhs.data[i];
        }
        self
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(mut self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] -= rhs.data[i];
        }
        self
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim);
        Self { dim, data: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i][i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.data[i][i] = *v;
        }
        m
    }

    /// Builds a matrix from `dim * dim` entries in row-major order.
    pub fn from_row_major(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: values.len() });
        }
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i][j] = values[i * dim + j];
            }
        }
        Ok(m)
    }

    pub fn to_row_major(&self) -> alloc::vec::Vec<f64> {
        let mut out = alloc::vec::Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            out.extend_from_slice(&self.data[i][..self.dim]);
        }
        out
    }

    /// Generator of rotations by `rate` in the (i, j) plane: `e_j ↦ rate·e_i`-type
    /// skew matrix with `m[i][j] = -rate`, `m[j][i] = rate`.
    pub fn rotation_generator(dim: usize, i: usize, j: usize, rate: f64) -> Self {
        let mut m = Self::zeros(dim);
        m.data[i][j] = -rate;
        m.data[j][i] = rate;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i][j] = self.data[j][i];
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        let mut out = *self;
        for row in out.data.iter_mut() {
            row.iter_mut().for_each(|x| *x *= factor);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.data[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i][i]).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).flat_map(move |i| self.data[i][..self.dim].iter().copied())
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(|x| x.is_finite())
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.dim, v.dim());
        let mut out = Vector::zeros(self.dim);
        for i in 0..self.dim {
            out[i] = (0..self.dim).map(|j| self.data[i][j] * v[j]).sum();
        }
        out
    }

    pub fn quadratic_form(&self, v: &Vector) -> f64 {
        v.dot(&self.mul_vec(v))
    }

    pub fn det(&self) -> f64 {
        let a = &self.data;
        match self.dim {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Solves `self · X = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        let n = self.dim;
        let mut a = self.data;
        let mut b = rhs.data;
        let scale = self.one_norm().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap_or(col);
            if a[pivot][col].abs() <= 4.0 * f64::EPSILON * scale {
                return Err(Error::Singular("solve"));
            }
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let factor = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                for k in 0..n {
                    b[row][k] -= factor * b[col][k];
                }
            }
        }
        let mut x = Matrix::zeros(n);
        for k in 0..n {
            for row in (0..n).rev() {
                let mut acc = b[row][k];
                for j in row + 1..n {
                    acc -= a[row][j] * x.data[j][k];
                }
                x.data[row][k] = acc / a[row][row];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.dim))
    }

    pub fn commutator(&self, other: &Matrix) -> Matrix {
        *self * *other - *other * *self
    }

    /// `‖M + Mᵀ‖_F ≤ tol · ‖M‖_F`.
    pub fn is_skew(&self, tol: f64) -> bool {
        (*self + self.transpose()).frobenius_norm() <= tol * self.frobenius_norm()
    }

    pub fn asymmetry(&self) -> f64 {
        (*self - self.transpose()).frobenius_norm()
    }

    pub fn symmetrized(&self) -> Matrix {
        (*self + self.transpose()).scale(0.5)
    }

    /// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
    pub fn symmetric_eigenvalues(&self) -> Vector {
        let (values, _) = self.symmetric_eigen();
        values
    }

    /// Eigen-decomposition of a symmetric matrix: ascending eigenvalues and
    /// the orthogonal matrix whose columns are the matching eigenvectors.
    pub fn symmetric_eigen(&self) -> (Vector, Matrix) {
        let n = self.dim;
        let mut a = self.symmetrized();
        let mut v = Matrix::identity(n);
        for _sweep in 0..64 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a.data[i][j] * a.data[i][j])
                .sum();
            if off <= 1e-30 * a.frobenius_norm().powi(2) || off == 0.0 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a.data[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a.data[q][q] - a.data[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.data[k][p];
                        let akq = a.data[k][q];
                        a.data[k][p] = c * akp - s * akq;
                        a.data[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a.data[p][k];
                        let aqk = a.data[q][k];
                        a.data[p][k] = c * apk - s * aqk;
                        a.data[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v.data[k][p];
                        let vkq = v.data[k][q];
                        v.data[k][p] = c * vkp - s * vkq;
                        v.data[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: [usize; MAX_DIM] = [0, 1, 2];
        order[..n].sort_by(|&i, &j| a.data[i][i].total_cmp(&a.data[j][j]));
        let mut values = Vector::zeros(n);
        let mut vectors = Matrix::zeros(n);
        for (dst, &src) in order[..n].iter().enumerate() {
            values[dst] = a.data[src][src];
            for k in 0..n {
                vectors.data[k][dst] = v.data[k][src];
            }
        }
        (values, vectors)
    }

    /// Lower-triangular `L` with `L Lᵀ = self`.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.dim;
        let mut l = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = self.data[i][j];
                for k in 0..j {
                    acc -= l.data[i][k] * l.data[j][k];
                }
                if i == j {
                    if acc <= 0.0 {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l.data[i][i] = acc.sqrt();
                } else {
                    l.data[i][j] = acc / l.data[j][j];
                }
            }
        }
        Ok(l)
    }

    /// Symmetric square root of a positive semi-definite matrix.
    pub fn sqrt_psd(&self) -> Matrix {
        self.spectral_map(|x| x.max(0.0).sqrt())
    }

    /// `f` applied through the eigen-decomposition of a symmetric matrix.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let (values, vectors) = self.symmetric_eigen();
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i][j] =
                    (0..n).map(|k| vectors.data[i][k] * f(values[k]) * vectors.data[j][k]).sum();
            }
        }
        out
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        let gram = self.transpose() * *self;
        let values = gram.symmetric_eigenvalues();
        values[self.dim - 1].max(0.0).sqrt()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i][j]
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(mut self, rhs: Matrix) -> Matrix {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] += rhs.data[i][j];
            }
        }
        self
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(mut self, rhs: Matrix) -> Matrix {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] -= rhs.data[i][j];
            }
        }
        self
    }
}

impl Neg for Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i][j] = (0..n).map(|k| self.data[i][k] * rhs.data[k][j]).sum();
            }
        }
        out
    }
}
