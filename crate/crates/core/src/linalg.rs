//! Small dense linear algebra: symmetric eigensolver, Moore–Penrose inverse,
//! Cholesky factors, and Gaussian elimination over the jet ring.

use std::ops::{Index, IndexMut};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::{Jet, Layout};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_fn(rows.len(), cols, |i, j| rows[i][j])
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&a| a * a).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &a| if a.abs() > m { a.abs() } else { m })
    }

    /// Largest `|A - Aᵀ|` entry.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition `A = V diag(λ) Vᵀ` of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// Eigenvectors stored as columns.
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k)
    }

    pub fn max_abs_value(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Only the upper triangle is read. Sweeps continue until the off-diagonal
/// mass drops below machine precision relative to the Frobenius norm.
pub fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> SymmetricEigen<T> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigensolver needs a square matrix");
    let mut m = Matrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let mut v = Matrix::identity(n);
    let norm = m.frobenius();
    let two = T::lit(2.0);

    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= T::epsilon() * norm * T::lit(1e-2) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).expect("finite eigenvalues"));
    SymmetricEigen {
        values: order.iter().map(|&i| m[(i, i)]).collect(),
        vectors: Matrix::from_fn(n, n, |r, c| v[(r, order[c])]),
    }
}

/// Moore–Penrose inverse of a symmetric matrix.
///
/// Eigenvalues with `|λ| <= rel_tol * max|λ|` are treated as zero.
pub fn moore_penrose<T: Scalar>(a: &Matrix<T>, rel_tol: T) -> Matrix<T> {
    let eig = symmetric_eigen(a);
    pinv_from_eigen(&eig, rel_tol)
}

pub(crate) fn pinv_from_eigen<T: Scalar>(eig: &SymmetricEigen<T>, rel_tol: T) -> Matrix<T> {
    let n = eig.values.len();
    let cutoff = rel_tol * eig.max_abs_value();
    let mut out = Matrix::zeros(n, n);
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda.abs() <= cutoff || lambda == T::zero() {
            continue;
        }
        let inv = T::one() / lambda;
        for i in 0..n {
            let vi = eig.vectors[(i, k)] * inv;
            for j in 0..n {
                out[(i, j)] += vi * eig.vectors[(j, k)];
            }
        }
    }
    out
}

/// Lower-triangular `L` with `A = L Lᵀ`. Fails when `A` is not positive definite.
pub fn cholesky<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            let min = symmetric_eigen(a).values[0];
            return Err(Error::SingularMetric {
                min_eigenvalue: min.to_f64_lossy(),
            });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_triangular_inverse<T: Scalar>(l: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { T::one() } else { T::zero() };
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

/// Square matrix of jets.
#[derive(Debug)]
pub struct JetMatrix<T> {
    n: usize,
    data: Vec<Jet<T>>,
}

impl<T: Scalar> Clone for JetMatrix<T> {
    fn clone(&self) -> Self {
        JetMatrix {
            n: self.n,
            data: self.data.clone(),
        }
    }
}

impl<T: Scalar> JetMatrix<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Jet<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        JetMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet<T> {
        &self.data[i * self.n + j]
    }

    pub fn values(&self) -> Matrix<T> {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j).value())
    }

    pub fn order(&self) -> usize {
        self.data.iter().map(Jet::order).min().unwrap_or(0)
    }

    /// Solves `A X = B` column by column with partial pivoting on constant terms.
    ///
    /// Valid whenever the constant-term matrix is invertible; every jet in the
    /// result carries the smaller of the two operands' orders.
    pub fn solve(&self, rhs: &[Vec<Jet<T>>]) -> Result<Vec<Vec<Jet<T>>>> {
        let n = self.n;
        let order = self
            .order()
            .min(rhs.iter().flatten().map(Jet::order).min().unwrap_or(0));
        let mut a: Vec<Vec<Jet<T>>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).truncate(order)).collect())
            .collect();
        let mut b: Vec<Vec<Jet<T>>> = (0..n)
            .map(|i| rhs.iter().map(|col| col[i].truncate(order)).collect())
            .collect();
        let scale = self.values().max_abs();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a[x][col]
                        .value()
                        .abs()
                        .partial_cmp(&a[y][col].value().abs())
                        .expect("finite pivots")
                })
                .expect("non-empty pivot range");
            if !(a[pivot][col].value().abs() > T::epsilon() * scale * T::lit(16.0)) {
                return Err(Error::SingularPoint(
                    "jet matrix has singular constant term".into(),
                ));
            }
            a.swap(col, pivot);
            b.swap(col, pivot);
            let inv = a[col][col].recip()?;
            for row in col + 1..n {
                if a[row][col].max_abs() == T::zero() {
                    continue;
                }
                let factor = &a[row][col] * &inv;
                for k in col..n {
                    let t = &factor * &a[col][k];
                    a[row][k] -= &t;
                }
                for k in 0..b[row].len() {
                    let t = &factor * &b[col][k];
                    b[row][k] -= &t;
                }
            }
        }
        let cols = rhs.len();
        let layout: Arc<Layout> = a[0][0].layout().clone();
        let mut x = vec![vec![Jet::zero(&layout, order); n]; cols];
        for c in 0..cols {
            for i in (0..n).rev() {
                let mut s = b[i][c].clone();
                for k in i + 1..n {
                    let t = &a[i][k] * &x[c][k];
                    s -= &t;
                }
                x[c][i] = s.try_div(&a[i][i])?;
            }
        }
        Ok(x)
    }

    /// Jet-valued inverse via [`JetMatrix::solve`] against the identity.
    pub fn inverse(&self) -> Result<JetMatrix<T>> {
        let n = self.n;
        let layout = self.data[0].layout().clone();
        let order = self.order();
        let identity: Vec<Vec<Jet<T>>> = (0..n)
            .map(|c| {
                (0..n)
                    .map(|i| Jet::constant(&layout, order, if i == c { T::one() } else { T::zero() }))
                    .collect()
            })
            .collect();
        let cols = self.solve(&identity)?;
        Ok(JetMatrix::from_fn(n, |i, j| cols[j][i].clone()))
    }
}
