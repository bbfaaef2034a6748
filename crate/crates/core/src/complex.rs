//! Complex-valued entry points.
//!
//! The kernels are generic over [`Scalar`], so the complex pipeline is their
//! `Complex64` instantiation. Gram matrices are built as `A^H A`, which makes
//! every `Γ` Hermitian rather than symmetric; transposes on `Γ` in the gradient
//! and the update are kept as written. This module adds kind dispatch for
//! tensors read from disk and helpers to lift real data into the complex field.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::cp::gradient;
use crate::error::{CpError, Result};
use crate::fit::{fit, FitConfig, FitResult};
use crate::flm::{flm_step, BVariant};
use crate::io::AnyTensor;
use crate::kruskal::KruskalModel;
use crate::scalar::ScalarKind;
use crate::tensor::DenseTensor;

pub type ComplexKruskalModel = KruskalModel<Complex64>;

/// `Y_(n) conj(KR_n) - A^(n) Γ^(n)^T`, stacked over modes.
pub fn complex_gradient(y: &DenseTensor<Complex64>, model: &ComplexKruskalModel) -> Result<DVector<Complex64>> {
    gradient(y, model)
}

/// Candidate factors of one fast damped step.
pub fn complex_flm_step(
    y: &DenseTensor<Complex64>,
    model: &ComplexKruskalModel,
    mu: f64,
    variant: BVariant,
) -> Result<ComplexKruskalModel> {
    Ok(flm_step(y, model, mu, variant)?.candidate)
}

pub fn fit_complex(y: &DenseTensor<Complex64>, config: &FitConfig) -> Result<FitResult<Complex64>> {
    fit(y, config)
}

/// Complex tensor from a file; rejects real data.
pub fn expect_complex(t: AnyTensor) -> Result<DenseTensor<Complex64>> {
    match t {
        AnyTensor::Complex(c) => Ok(c),
        AnyTensor::Real(_) => Err(kind_mismatch(ScalarKind::Complex, ScalarKind::Real)),
    }
}

pub fn kind_mismatch(expected: ScalarKind, found: ScalarKind) -> CpError {
    CpError::InvalidArgument(format!("scalar kind mismatch: expected {expected:?}, found {found:?}"))
}

/// Real tensor with zero imaginary parts.
pub fn embed_tensor(t: &DenseTensor<f64>) -> DenseTensor<Complex64> {
    DenseTensor::new(t.dims().to_vec(), t.data().iter().map(|&x| Complex64::new(x, 0.0)).collect())
        .expect("same shape")
}

pub fn embed_model(m: &KruskalModel<f64>) -> ComplexKruskalModel {
    let factors = m.factors().iter().map(|f| f.map(|x| Complex64::new(x, 0.0))).collect();
    match m.weights() {
        Some(w) => KruskalModel::with_weights(factors, w.map(|x| Complex64::new(x, 0.0))),
        None => KruskalModel::new(factors),
    }
    .expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{fit_from, Algorithm};
    use crate::hessian::{dense_damped_solve, dense_gradient};
    use crate::init::random_init;

    fn noisy(dims: &[usize], seed: u64) -> DenseTensor<Complex64> {
        let a: ComplexKruskalModel = random_init(dims, 2, seed).unwrap();
        let b: ComplexKruskalModel = random_init(dims, 1, seed + 100).unwrap();
        a.reconstruct().sub(&b.reconstruct().map(|x| x * 0.2)).unwrap()
    }

    #[test]
    fn gradient_matches_jacobian_oracle() {
        let y = noisy(&[3, 4, 5], 1);
        let m: ComplexKruskalModel = random_init(&[3, 4, 5], 2, 2).unwrap();
        let g = complex_gradient(&y, &m).unwrap();
        let want = dense_gradient(&y, &m).unwrap();
        assert!((&g - &want).norm() <= 1e-10 * want.norm());
    }

    #[test]
    fn exact_fit_has_zero_gradient_and_step() {
        let m: ComplexKruskalModel = random_init(&[3, 4, 4], 2, 3).unwrap();
        let y = m.reconstruct();
        assert!(complex_gradient(&y, &m).unwrap().norm() < 1e-12);
        let next = complex_flm_step(&y, &m, 0.1, BVariant::FlmA).unwrap();
        assert!((next.to_vec() - m.to_vec()).norm() < 1e-10);
    }

    #[test]
    fn step_matches_dense_solve() {
        let y = noisy(&[3, 4, 4], 4);
        let m: ComplexKruskalModel = random_init(&[3, 4, 4], 2, 5).unwrap();
        let want = m.to_vec() + dense_damped_solve(&y, &m, 0.1).unwrap();
        for v in [BVariant::FlmA, BVariant::FlmB] {
            let got = complex_flm_step(&y, &m, 0.1, v).unwrap().to_vec();
            assert!((&got - &want).norm() <= 1e-8 * want.norm());
        }
    }

    #[test]
    fn real_embedding_matches_real_gradient() {
        let m: KruskalModel<f64> = random_init(&[3, 4, 2], 2, 6).unwrap();
        let y: DenseTensor<f64> = random_init(&[3, 4, 2], 3, 7).unwrap().reconstruct();
        let gr = gradient(&y, &m).unwrap();
        let gc = complex_gradient(&embed_tensor(&y), &embed_model(&m)).unwrap();
        for (a, b) in gr.iter().zip(gc.iter()) {
            assert!((b - Complex64::new(*a, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn fit_complex_exact() {
        let y: DenseTensor<Complex64> = random_init(&[5, 4, 6], 3, 8).unwrap().reconstruct();
        let cfg = FitConfig { tol: 1e-12, max_iters: 300, ..FitConfig::new(Algorithm::FlmA, 3) };
        let res = fit_complex(&y, &cfg).unwrap();
        assert!(res.trace.final_error() < 1e-8);
        let _ = fit_from(&y, res.model, &cfg).unwrap();
    }

    #[test]
    fn kind_dispatch() {
        let t = AnyTensor::Real(DenseTensor::zeros(vec![2, 2]).unwrap());
        assert!(expect_complex(t).is_err());
    }
}
