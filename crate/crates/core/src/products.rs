//! Kronecker, Khatri-Rao and Hadamard products, and commutation permutations.

use crate::error::{check_mode, CpError, Result};
use crate::scalar::Scalar;
use crate::tensor::split_dims;
use crate::Matrix;

pub fn kronecker<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Matrix::zeros(ra * rb, ca * cb);
    for j in 0..ca {
        for i in 0..ra {
            let s = a[(i, j)];
            if s == T::zero() {
                continue;
            }
            for l in 0..cb {
                for k in 0..rb {
                    out[(i * rb + k, j * cb + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-wise Kronecker product.
pub fn khatri_rao<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.ncols() != b.ncols() {
        return Err(CpError::ShapeMismatch(format!(
            "khatri_rao column counts {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, rb) = (a.nrows(), b.nrows());
    let mut out = Matrix::zeros(ra * rb, a.ncols());
    for r in 0..a.ncols() {
        for i in 0..ra {
            let s = a[(i, r)];
            for k in 0..rb {
                out[(i * rb + k, r)] = s * b[(k, r)];
            }
        }
    }
    Ok(out)
}

/// `A^(N-1) ⊙ ... ⊙ A^(0)` skipping mode `n`; mode 0 varies fastest in the rows.
///
/// With a single factor the empty product is a `1 x R` row of ones.
pub fn khatri_rao_excl<T: Scalar>(factors: &[Matrix<T>], n: usize) -> Result<Matrix<T>> {
    check_mode(n, factors.len())?;
    let r = factors[n].ncols();
    if let Some(bad) = factors.iter().find(|f| f.ncols() != r) {
        return Err(CpError::ShapeMismatch(format!(
            "factor has {} columns, expected {r}",
            bad.ncols()
        )));
    }
    let mut acc: Option<Matrix<T>> = None;
    for k in (0..factors.len()).rev().filter(|&k| k != n) {
        acc = Some(match acc {
            None => factors[k].clone(),
            Some(m) => khatri_rao(&m, &factors[k])?,
        });
    }
    Ok(acc.unwrap_or_else(|| Matrix::from_element(1, r, T::one())))
}

pub fn hadamard<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    check_same_shape(a, b)?;
    Ok(a.component_mul(b))
}

pub fn elementwise_div<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    check_same_shape(a, b)?;
    let mut out = a.clone();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let d = b[(i, j)];
            if d == T::zero() {
                return Err(CpError::DivisionByZero { row: i, col: j });
            }
            out[(i, j)] = a[(i, j)] / d;
        }
    }
    Ok(out)
}

fn check_same_shape<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(CpError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// A permutation matrix stored as an index map: `(P v)[k] = v[map[k]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &m in &map {
            if m >= map.len() || std::mem::replace(&mut seen[m], true) {
                return Err(CpError::InvalidArgument("index map is not a permutation".into()));
            }
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply<T: Copy>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.map.len(), "permutation length mismatch");
        self.map.iter().map(|&k| v[k]).collect()
    }

    /// Permute the rows of `m`.
    pub fn apply_rows<T: Scalar>(&self, m: &Matrix<T>) -> Matrix<T> {
        assert_eq!(m.nrows(), self.map.len(), "permutation length mismatch");
        Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(self.map[i], j)])
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (k, &m) in self.map.iter().enumerate() {
            inv[m] = k;
        }
        Self { map: inv }
    }

    /// Dense form, for tests and oracles only.
    pub fn to_dense<T: Scalar>(&self) -> Matrix<T> {
        let n = self.map.len();
        let mut p = Matrix::zeros(n, n);
        for (k, &m) in self.map.iter().enumerate() {
            p[(k, m)] = T::one();
        }
        p
    }
}

/// `P_{I,J}` with `P vec(X^T) = vec(X)` for every `I x J` matrix `X`.
pub fn commutation(i: usize, j: usize) -> Permutation {
    let mut map = vec![0; i * j];
    for b in 0..j {
        for a in 0..i {
            map[a + i * b] = b + j * a;
        }
    }
    Permutation { map }
}

/// `Q_n` with `Q_n vec(Y_(n)) = vec(Y)`.
pub fn mode_commutation(dims: &[usize], n: usize) -> Result<Permutation> {
    check_mode(n, dims.len())?;
    let (left, i_n, right) = split_dims(dims, n);
    let mut map = vec![0; left * i_n * right];
    for r in 0..right {
        for i in 0..i_n {
            for l in 0..left {
                map[l + left * (i + i_n * r)] = i + i_n * (l + left * r);
            }
        }
    }
    Ok(Permutation { map })
}
