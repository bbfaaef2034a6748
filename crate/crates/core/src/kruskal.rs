//! Kruskal (factor matrix) models, reconstruction and scaling conventions.

use nalgebra::DVector;

use crate::error::{check_mode, CpError, Result};
use crate::products::khatri_rao_excl;
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::Matrix;

/// `sum_r λ_r a_r^(1) ∘ ... ∘ a_r^(N)`; absent weights mean all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalModel<T: Scalar> {
    factors: Vec<Matrix<T>>,
    weights: Option<DVector<T>>,
}

impl<T: Scalar> KruskalModel<T> {
    pub fn new(factors: Vec<Matrix<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(CpError::InvalidDims("model needs at least one factor".into()));
        }
        let r = factors[0].ncols();
        if r == 0 {
            return Err(CpError::InvalidArgument("rank must be at least 1".into()));
        }
        for (n, f) in factors.iter().enumerate() {
            if f.ncols() != r {
                return Err(CpError::ShapeMismatch(format!(
                    "factor {n} has {} columns, expected {r}",
                    f.ncols()
                )));
            }
            if f.nrows() == 0 {
                return Err(CpError::InvalidDims(format!("factor {n} has no rows")));
            }
        }
        Ok(Self { factors, weights: None })
    }

    pub fn with_weights(factors: Vec<Matrix<T>>, weights: DVector<T>) -> Result<Self> {
        let mut m = Self::new(factors)?;
        if weights.len() != m.rank() {
            return Err(CpError::ShapeMismatch(format!(
                "{} weights for rank {}",
                weights.len(),
                m.rank()
            )));
        }
        m.weights = Some(weights);
        Ok(m)
    }

    pub fn factors(&self) -> &[Matrix<T>] {
        &self.factors
    }

    pub fn factor(&self, n: usize) -> &Matrix<T> {
        &self.factors[n]
    }

    pub fn into_factors(self) -> Vec<Matrix<T>> {
        self.absorb_weights().factors
    }

    pub fn weights(&self) -> Option<&DVector<T>> {
        self.weights.as_ref()
    }

    pub fn weight(&self, r: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[r])
    }

    pub fn rank(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    /// Number of free parameters `R * sum_n I_n`.
    pub fn num_params(&self) -> usize {
        self.rank() * self.factors.iter().map(|f| f.nrows()).sum::<usize>()
    }

    /// Fold the weights into the last factor, leaving an unweighted model.
    pub fn absorb_weights(&self) -> Self {
        let mut factors = self.factors.clone();
        if let Some(w) = &self.weights {
            let last = factors.last_mut().expect("nonempty");
            for r in 0..w.len() {
                let s = w[r];
                scale_col(last, r, s);
            }
        }
        Self { factors, weights: None }
    }

    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if self.dims() != dims {
            return Err(CpError::ShapeMismatch(format!(
                "model dims {:?} vs tensor dims {:?}",
                self.dims(),
                dims
            )));
        }
        Ok(())
    }

    pub fn reconstruct(&self) -> DenseTensor<T> {
        let model = self.absorb_weights();
        let kr = khatri_rao_excl(&model.factors, 0).expect("consistent model");
        let y1 = &model.factors[0] * kr.transpose();
        DenseTensor::new(self.dims(), y1.as_slice().to_vec()).expect("consistent model")
    }

    pub fn conj(&self) -> Self {
        Self {
            factors: self.factors.iter().map(|f| f.conjugate()).collect(),
            weights: self.weights.as_ref().map(|w| w.conjugate()),
        }
    }

    /// `[vec A^(1); ...; vec A^(N)]` of the weight-absorbed factors.
    pub fn to_vec(&self) -> DVector<T> {
        let m = self.absorb_weights();
        let data: Vec<T> = m.factors.iter().flat_map(|f| f.iter().copied()).collect();
        DVector::from_vec(data)
    }

    pub fn from_vec(dims: &[usize], rank: usize, v: &[T]) -> Result<Self> {
        let total: usize = dims.iter().map(|d| d * rank).sum();
        if v.len() != total {
            return Err(CpError::ShapeMismatch(format!(
                "parameter vector length {} vs expected {total}",
                v.len()
            )));
        }
        let mut offset = 0;
        let factors = dims
            .iter()
            .map(|&d| {
                let f = Matrix::from_column_slice(d, rank, &v[offset..offset + d * rank]);
                offset += d * rank;
                f
            })
            .collect();
        Self::new(factors)
    }

    /// Per-mode column norms `||a_r^(n)||` as an `N x R` table.
    pub fn column_norms(&self) -> Vec<Vec<f64>> {
        self.factors
            .iter()
            .map(|f| (0..f.ncols()).map(|r| f.column(r).norm()).collect())
            .collect()
    }

    /// `|λ_r| prod_n ||a_r^(n)||` for each component.
    pub fn component_magnitudes(&self) -> Vec<f64> {
        let norms = self.column_norms();
        (0..self.rank())
            .map(|r| self.weight(r).modulus() * norms.iter().map(|row| row[r]).product::<f64>())
            .collect()
    }

    fn nonzero_norms(&self) -> Result<Vec<Vec<f64>>> {
        let norms = self.column_norms();
        for (n, row) in norms.iter().enumerate() {
            if let Some(r) = row.iter().position(|&x| x == 0.0) {
                return Err(CpError::ZeroComponent { component: r, mode: n });
            }
        }
        for r in 0..self.rank() {
            if self.weight(r) == T::zero() {
                return Err(CpError::ZeroComponent { component: r, mode: 0 });
            }
        }
        Ok(norms)
    }

    /// Unweighted model whose component vectors share the norm
    /// `(|λ_r| prod_n ||a_r^(n)||)^(1/N)` in every mode.
    ///
    /// The largest-modulus entry of each first-mode column is made real and
    /// positive; the compensating phase goes into the last mode.
    pub fn normalize_equal_energy(&self) -> Result<Self> {
        let norms = self.nonzero_norms()?;
        let order = self.order();
        let mut factors = self.factors.clone();
        for r in 0..self.rank() {
            let w = self.weight(r);
            let mag = w.modulus() * norms.iter().map(|row| row[r]).product::<f64>();
            let target = mag.powf(1.0 / order as f64);
            for (n, f) in factors.iter_mut().enumerate() {
                scale_col(f, r, T::from_real(target / norms[n][r]));
            }
            let phase = w / T::from_real(w.modulus());
            scale_col(&mut factors[order - 1], r, phase);
        }
        fix_phases(&mut factors, None);
        Ok(Self { factors, weights: None })
    }

    /// Unit-norm factor columns with the magnitudes carried by real nonnegative weights.
    pub fn normalize_unit(&self) -> Result<Self> {
        let norms = self.nonzero_norms()?;
        let mut factors = self.factors.clone();
        let mut weights = DVector::from_fn(self.rank(), |r, _| self.weight(r));
        for r in 0..self.rank() {
            for (n, f) in factors.iter_mut().enumerate() {
                scale_col(f, r, T::from_real(1.0 / norms[n][r]));
                weights[r] *= T::from_real(norms[n][r]);
            }
        }
        fix_phases(&mut factors, Some(&mut weights));
        Ok(Self { factors, weights: Some(weights) })
    }
}

/// Make the largest-modulus entry of each first-mode column real positive.
/// With weights, the compensation lands in λ and λ's phase then moves to the last mode.
fn fix_phases<T: Scalar>(factors: &mut [Matrix<T>], mut weights: Option<&mut DVector<T>>) {
    let order = factors.len();
    for r in 0..factors[0].ncols() {
        let col = factors[0].column(r);
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, x)| if x.modulus() > best.1 { (i, x.modulus()) } else { best });
        let pivot = col[imax];
        let m = pivot.modulus();
        if m == 0.0 {
            continue;
        }
        let phase = pivot / T::from_real(m);
        match weights.as_deref_mut() {
            Some(w) => {
                scale_col(&mut factors[0], r, phase.conjugate());
                w[r] *= phase;
                let wm = w[r].modulus();
                if order > 1 && wm > 0.0 {
                    let wp = w[r] / T::from_real(wm);
                    scale_col(&mut factors[order - 1], r, wp);
                    w[r] = T::from_real(wm);
                }
            }
            None if order > 1 => {
                scale_col(&mut factors[0], r, phase.conjugate());
                scale_col(&mut factors[order - 1], r, phase);
            }
            None => {}
        }
    }
}

fn scale_col<T: Scalar>(m: &mut Matrix<T>, r: usize, s: T) {
    for x in m.column_mut(r).iter_mut() {
        *x *= s;
    }
}

/// Validate that a model matches a tensor and return its mode count.
pub(crate) fn check_model<T: Scalar>(y: &DenseTensor<T>, model: &KruskalModel<T>, n: usize) -> Result<()> {
    model.check_dims(y.dims())?;
    check_mode(n, model.order())
}
