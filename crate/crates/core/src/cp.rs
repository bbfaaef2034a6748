//! MTTKRP, gradient and fit error.

use nalgebra::DVector;

use crate::error::{CpError, Result};
use crate::gram::GramCache;
use crate::kruskal::{check_model, KruskalModel};
use crate::products::khatri_rao_excl;
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::Matrix;

/// `Y_(n) conj(⊙_{k≠n} A^(k))`. Weights are ignored; only the factors enter.
pub fn mttkrp<T: Scalar>(y: &DenseTensor<T>, model: &KruskalModel<T>, n: usize) -> Result<Matrix<T>> {
    check_model(y, model, n)?;
    mttkrp_factors(y, model.factors(), n)
}

pub(crate) fn mttkrp_factors<T: Scalar>(
    y: &DenseTensor<T>,
    factors: &[Matrix<T>],
    n: usize,
) -> Result<Matrix<T>> {
    let kr = khatri_rao_excl(factors, n)?;
    Ok(y.unfold(n)? * kr.conjugate())
}

/// Per-mode blocks `Y_(n) conj(KR_n) - A^(n) Γ^(n)^T` for the weight-absorbed model.
pub fn gradient_blocks<T: Scalar>(y: &DenseTensor<T>, model: &KruskalModel<T>) -> Result<Vec<Matrix<T>>> {
    check_model(y, model, 0)?;
    let m = model.absorb_weights();
    let cache = GramCache::from_factors(m.factors());
    (0..m.order())
        .map(|n| Ok(mttkrp_factors(y, m.factors(), n)? - m.factor(n) * cache.gamma_excl(n).transpose()))
        .collect()
}

/// `J^H vec(Y - Ŷ)` laid out as `[vec G_1; ...; vec G_N]`.
pub fn gradient<T: Scalar>(y: &DenseTensor<T>, model: &KruskalModel<T>) -> Result<DVector<T>> {
    Ok(stack_blocks(&gradient_blocks(y, model)?))
}

pub(crate) fn stack_blocks<T: Scalar>(blocks: &[Matrix<T>]) -> DVector<T> {
    DVector::from_vec(blocks.iter().flat_map(|b| b.iter().copied()).collect())
}

/// `||Y - Ŷ||_F^2`, computed from an explicit reconstruction.
pub fn residual_norm2<T: Scalar>(y: &DenseTensor<T>, model: &KruskalModel<T>) -> Result<f64> {
    model.check_dims(y.dims())?;
    let yhat = model.reconstruct();
    Ok(y.data().iter().zip(yhat.data()).map(|(&a, &b)| (a - b).modulus_squared()).sum())
}

/// `||Y - Ŷ||_F / ||Y||_F`.
pub fn relative_error<T: Scalar>(y: &DenseTensor<T>, model: &KruskalModel<T>) -> Result<f64> {
    let ny = y.norm_squared();
    if ny == 0.0 {
        return Err(CpError::ZeroNorm);
    }
    Ok((residual_norm2(y, model)? / ny).sqrt())
}
