//! Small dense linear algebra toolkit (row-major, `f64`).
//!
//! Deliberately minimal: the solvers in this crate only ever need dense
//! mat-vec products, Cholesky/LU factorizations of small matrices and
//! spectral estimates for symmetric positive (semi)definite matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    /// Matrix is not (numerically) positive definite.
    NotPositiveDefinite,
    /// Matrix is singular to working precision.
    Singular,
    /// Dimension mismatch between operands.
    Shape,
}

impl core::fmt::Display for LinalgError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LinalgError::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            LinalgError::Singular => write!(f, "matrix is singular"),
            LinalgError::Shape => write!(f, "dimension mismatch"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinalgError {}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map(|v| v.len()).unwrap_or(0);
        if rows.iter().any(|v| v.len() != c) {
            return Err(LinalgError::Shape);
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            out.push(dot(self.row(i), x));
        }
        out
    }

    /// `A^T x`.
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// `A B`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Shape);
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(math::abs(v)))
    }

    /// Symmetrize in place: `A <- (A + A^T)/2`.
    pub fn symmetrize(&mut self) {
        debug_assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn norm2(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    norm2(&sub(a, b))
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Matrix) -> Result<Matrix, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::Shape);
    }
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite);
                }
                l[(i, i)] = math::sqrt(s);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve `L L^T x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    debug_assert_eq!(b.len(), n);
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// LU factorization with partial pivoting, packed in place.
pub struct LuFactors {
    lu: Matrix,
    pivots: Vec<usize>,
}

pub fn lu_factor(a: &Matrix) -> Result<LuFactors, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::Shape);
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut pivots = Vec::with_capacity(n);
    for col in 0..n {
        let mut p = col;
        let mut best = math::abs(lu[(col, col)]);
        for r in (col + 1)..n {
            let v = math::abs(lu[(r, col)]);
            if v > best {
                best = v;
                p = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(LinalgError::Singular);
        }
        if p != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
        }
        pivots.push(p);
        for r in (col + 1)..n {
            let f = lu[(r, col)] / lu[(col, col)];
            lu[(r, col)] = f;
            for j in (col + 1)..n {
                let v = lu[(col, j)];
                lu[(r, j)] -= f * v;
            }
        }
    }
    Ok(LuFactors { lu, pivots })
}

pub fn lu_solve(f: &LuFactors, b: &[f64]) -> Vec<f64> {
    let n = f.lu.rows;
    debug_assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for i in 0..n {
        x.swap(i, f.pivots[i]);
        for k in 0..i {
            let v = f.lu[(i, k)] * x[k];
            x[i] -= v;
        }
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = f.lu[(i, k)] * x[k];
            x[i] -= v;
        }
        x[i] /= f.lu[(i, i)];
    }
    x
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration on a deterministic start vector. Returns a Rayleigh-quotient
/// estimate; callers needing a certified upper bound should inflate it.
pub fn dominant_eigenvalue(a: &Matrix, max_iters: usize, tol: f64) -> f64 {
    let n = a.rows;
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) / (n as f64)).collect();
    let nrm = norm2(&v);
    for x in v.iter_mut() {
        *x /= nrm;
    }
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = a.matvec(&v);
        let new_lambda = dot(&v, &w);
        let wn = norm2(&w);
        if wn == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / wn).collect();
        if math::abs(new_lambda - lambda) <= tol * (1.0 + math::abs(new_lambda)) {
            return new_lambda;
        }
        lambda = new_lambda;
    }
    lambda
}

/// Smallest eigenvalue of a symmetric positive definite matrix via inverse
/// power iteration through a Cholesky factorization.
pub fn smallest_eigenvalue_spd(a: &Matrix) -> Result<f64, LinalgError> {
    let l = cholesky(a)?;
    let n = a.rows;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) / (n as f64)).collect();
    let nrm = norm2(&v);
    for x in v.iter_mut() {
        *x /= nrm;
    }
    let mut mu = 0.0;
    for _ in 0..20_000 {
        let w = cholesky_solve(&l, &v);
        let new_mu = dot(&v, &w);
        let wn = norm2(&w);
        if wn == 0.0 {
            return Err(LinalgError::Singular);
        }
        v = w.iter().map(|x| x / wn).collect();
        if math::abs(new_mu - mu) <= 1e-14 * (1.0 + math::abs(new_mu)) {
            mu = new_mu;
            break;
        }
        mu = new_mu;
    }
    if mu <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite);
    }
    Ok(1.0 / mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solve_roundtrip() {
        let a = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let l = cholesky(&a).unwrap();
        let b = vec![1.0, -2.0, 0.5];
        let x = cholesky_solve(&l, &b);
        let r = sub(&a.matvec(&x), &b);
        assert!(norm2(&r) < 1e-12, "residual {}", norm2(&r));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(cholesky(&a), Err(LinalgError::NotPositiveDefinite));
    }

    #[test]
    fn lu_solves_general_systems() {
        let a = Matrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, -1.0, 0.0],
            vec![3.0, 0.0, -2.0],
        ])
        .unwrap();
        let f = lu_factor(&a).unwrap();
        let b = vec![3.0, 0.0, 1.0];
        let x = lu_solve(&f, &b);
        let r = sub(&a.matvec(&x), &b);
        assert!(norm2(&r) < 1e-12);
    }

    #[test]
    fn spectral_estimates_on_diagonal() {
        let a = Matrix::from_diagonal(&[1.0, 3.0, 100.0]);
        let hi = dominant_eigenvalue(&a, 10_000, 1e-14);
        let lo = smallest_eigenvalue_spd(&a).unwrap();
        assert!((hi - 100.0).abs() < 1e-8, "hi {hi}");
        assert!((lo - 1.0).abs() < 1e-8, "lo {lo}");
    }
}
