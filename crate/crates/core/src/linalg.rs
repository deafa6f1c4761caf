//! Small dense linear algebra: a square row-major matrix, a Cholesky
//! solve for the Newton step, and a cyclic Jacobi eigensolver for the
//! normal-mode problem. Chains are at most a few tens of ions, so nothing
//! here needs to be clever.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Matrix {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Matrix {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix::from_fn(self.n, |i, j| (0..self.n).map(|k| self[(i, k)] * other[(k, j)]).sum())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)] * self[(i, j)];
                }
            }
        }
        s.sqrt()
    }

    fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Solves `a x = b` for symmetric positive-definite `a`.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::Domain("matrix is not positive definite".into()));
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
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
        y[i] = (b[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (y[i] - s) / l[(i, i)];
    }
    Ok(x)
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`, with its first
    /// non-negligible component positive.
    pub vectors: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below `tol` relative to the whole matrix.
pub fn jacobi_eigen(a: &Matrix, tol: f64) -> Result<SymmetricEigen> {
    let n = a.dim();
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    while a.off_diagonal_norm() > tol * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi eigensolver",
                iterations: sweeps,
                residual: a.off_diagonal_norm() / scale,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle that zeroes a[p][q] (Rutishauser's form).
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
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
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let column = v.column(src);
        let big = column.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let sign = column
            .iter()
            .find(|x| x.abs() > 1e-10 * big)
            .map_or(1.0, |x| x.signum());
        for (i, x) in column.iter().enumerate() {
            vectors[(i, col)] = sign * x;
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix() -> Matrix {
        Matrix::from_fn(4, |i, j| {
            let (i, j) = (i as f64, j as f64);
            if i == j {
                4.0 + i
            } else {
                1.0 / (1.0 + (i - j).abs()) + 0.1 * (i + j)
            }
        })
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = test_matrix();
        let x = [1.0, -2.0, 0.5, 3.0];
        let b = a.mul_vec(&x);
        let got = cholesky_solve(&a, &b).unwrap();
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(cholesky_solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = test_matrix();
        let eig = jacobi_eigen(&a, 1e-14).unwrap();
        let d = Matrix::from_fn(4, |i, j| if i == j { eig.values[i] } else { 0.0 });
        let back = eig.vectors.mul(&d).mul(&eig.vectors.transpose());
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[(i, j)] - a[(i, j)]).abs() < 1e-12);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        let a = test_matrix();
        let eig = jacobi_eigen(&a, 1e-14).unwrap();
        let na = nalgebra::DMatrix::from_fn(4, 4, |i, j| a[(i, j)]);
        let mut reference: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (x, y) in eig.values.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn jacobi_sign_convention() {
        let a = test_matrix();
        let eig = jacobi_eigen(&a, 1e-14).unwrap();
        for j in 0..4 {
            assert!(eig.vectors[(0, j)] > 0.0);
        }
    }

    #[test]
    fn jacobi_on_diagonal_and_scalar() {
        let eig = jacobi_eigen(&Matrix::identity(1), 1e-12).unwrap();
        assert_eq!(eig.values, vec![1.0]);
        assert_eq!(eig.vectors, Matrix::identity(1));

        let a = Matrix::from_fn(3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 });
        let eig = jacobi_eigen(&a, 1e-12).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
    }
}
