//! Dense column-major tensors and mode-n unfoldings.
//!
//! Entry `(i_1, ..., i_N)` lives at `i_1 + I_1 (i_2 + I_2 (i_3 + ...))`, so the
//! mode-1 unfolding read column by column is the storage order itself.
//! Modes are 0-based throughout the crate.

use nalgebra::DVector;

use crate::error::{check_mode, CpError, Result};
use crate::scalar::{Scalar, ScalarKind};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

fn validate_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(CpError::InvalidDims("tensor order must be at least 1".into()));
    }
    if let Some(k) = dims.iter().position(|&d| d == 0) {
        return Err(CpError::InvalidDims(format!("dimension {k} is zero")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| CpError::InvalidDims("element count overflows usize".into()))
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let len = validate_dims(&dims)?;
        if data.len() != len {
            return Err(CpError::ShapeMismatch(format!(
                "data length {} does not match product of dims {:?} = {len}",
                data.len(),
                dims
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = validate_dims(&dims)?;
        Ok(Self { dims, data: vec![T::zero(); len] })
    }

    /// Fill by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len = validate_dims(&dims)?;
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for (k, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < dims[k] {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn scalar_kind(&self) -> ScalarKind {
        T::KIND
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter()
            .zip(&self.dims)
            .rev()
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.linear_index(idx)]
    }

    /// Mode-n unfolding `Y_(n)` of size `I_n x J/I_n`.
    ///
    /// Column index enumerates the remaining modes in ascending order, lowest fastest.
    pub fn unfold(&self, n: usize) -> Result<Matrix<T>> {
        check_mode(n, self.order())?;
        let (left, i_n, right) = split_dims(&self.dims, n);
        let cols = left * right;
        let mut m = Matrix::zeros(i_n, cols);
        for r in 0..right {
            for i in 0..i_n {
                let src = left * (i + i_n * r);
                for l in 0..left {
                    m[(i, l + left * r)] = self.data[src + l];
                }
            }
        }
        Ok(m)
    }

    /// Inverse of [`unfold`](Self::unfold).
    pub fn fold(m: &Matrix<T>, dims: &[usize], n: usize) -> Result<Self> {
        let len = validate_dims(dims)?;
        check_mode(n, dims.len())?;
        let (left, i_n, right) = split_dims(dims, n);
        if m.nrows() != i_n || m.ncols() * i_n != len {
            return Err(CpError::ShapeMismatch(format!(
                "cannot fold {}x{} matrix into mode {n} of {:?}",
                m.nrows(),
                m.ncols(),
                dims
            )));
        }
        let mut data = vec![T::zero(); len];
        for r in 0..right {
            for i in 0..i_n {
                let dst = left * (i + i_n * r);
                for l in 0..left {
                    data[dst + l] = m[(i, l + left * r)];
                }
            }
        }
        Ok(Self { dims: dims.to_vec(), data })
    }

    /// `vec(Y)`, identical to the storage order.
    pub fn vectorize(&self) -> DVector<T> {
        DVector::from_column_slice(&self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|x| x.modulus_squared()).sum()
    }

    pub fn conj(&self) -> Self {
        self.map(|x| x.conjugate())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { dims: self.dims.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(Self { dims: self.dims.clone(), data })
    }

    pub fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(CpError::ShapeMismatch(format!(
                "tensor dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

/// `(prod of dims before n, I_n, prod of dims after n)`.
pub(crate) fn split_dims(dims: &[usize], n: usize) -> (usize, usize, usize) {
    let left = dims[..n].iter().product();
    let right = dims[n + 1..].iter().product();
    (left, dims[n], right)
}
