//! Small dense linear algebra helpers.
//!
//! `lu_solve` is a plain partial-pivoting LU used by the fast solver paths; the
//! dense oracle goes through nalgebra's own factorizations instead.

use nalgebra::SymmetricEigen;

use crate::error::{CpError, Result};
use crate::scalar::Scalar;
use crate::Matrix;

/// Solve `A X = B` by Gaussian elimination with partial pivoting.
///
/// Fails when a pivot falls below `n * eps * max|A|`.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(CpError::ShapeMismatch(format!(
            "lu_solve with A {:?} and B {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.modulus()));
    if !scale.is_finite() {
        return Err(CpError::Singular("non-finite matrix entries".into()));
    }
    let tiny = scale * n as f64 * f64::EPSILON;
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let (p, pmax) = (k..n).fold((k, -1.0), |best, i| {
            let v = lu[(i, k)].modulus();
            if v > best.1 { (i, v) } else { best }
        });
        if pmax <= tiny || pmax == 0.0 {
            return Err(CpError::Singular(format!("pivot {pmax:e} at column {k} of {n}")));
        }
        if p != k {
            lu.swap_rows(p, k);
            x.swap_rows(p, k);
        }
        let piv = lu[(k, k)];
        for i in k + 1..n {
            let l = lu[(i, k)] / piv;
            if l == T::zero() {
                continue;
            }
            lu[(i, k)] = l;
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= l * u;
            }
            for j in 0..x.ncols() {
                let u = x[(k, j)];
                x[(i, j)] -= l * u;
            }
        }
    }
    for j in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

pub fn lu_inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    lu_solve(a, &Matrix::identity(a.nrows(), a.nrows()))
}

/// Moore-Penrose inverse of a Hermitian matrix; eigenvalues below
/// `eps * R * max|eigenvalue|` are dropped.
pub fn hermitian_pinv<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    let r = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let tol = f64::EPSILON * r as f64 * lmax;
    let mut out = Matrix::zeros(r, r);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > tol {
            let v = eig.eigenvectors.column(k);
            out += v * v.adjoint() * T::from_real(1.0 / lam);
        }
    }
    out
}

/// `(Γ + μ I)^{-1}` for Hermitian positive semidefinite `Γ` and `μ > 0`.
pub fn damped_inverse<T: Scalar>(gamma: &Matrix<T>, mu: f64) -> Result<Matrix<T>> {
    let r = gamma.nrows();
    let mut m = gamma.clone();
    for i in 0..r {
        m[(i, i)] += T::from_real(mu);
    }
    match m.clone().cholesky() {
        Some(ch) => Ok(ch.inverse()),
        None => lu_inverse(&m),
    }
}

/// Hermitian part `(M + M^H)/2`.
pub fn hermitian_part<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    (m + m.adjoint()) * T::from_real(0.5)
}

/// Relative Frobenius distance `||a - b|| / ||b||` (absolute when `b` is zero).
pub fn rel_diff<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s > 0.0 { d / s } else { d }
}
