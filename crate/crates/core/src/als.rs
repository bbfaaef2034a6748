//! Alternating least squares and its extrapolated variant.

use crate::cp::{mttkrp_factors, relative_error};
use crate::error::Result;
use crate::kruskal::{check_model, KruskalModel};
use crate::linalg::hermitian_pinv;
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::Matrix;

/// One sweep over modes `0..N`, each solve using the factors already updated in this sweep.
pub fn als_step<T: Scalar>(y: &DenseTensor<T>, model: &KruskalModel<T>) -> Result<KruskalModel<T>> {
    check_model(y, model, 0)?;
    let mut factors = model.absorb_weights().into_factors();
    let r = model.rank();
    let mut grams: Vec<Matrix<T>> = factors.iter().map(|a| a.adjoint() * a).collect();
    for n in 0..factors.len() {
        let m = mttkrp_factors(y, &factors, n)?;
        let mut gamma = Matrix::from_element(r, r, T::one());
        for (k, c) in grams.iter().enumerate() {
            if k != n {
                gamma.component_mul_assign(c);
            }
        }
        // Normal equations A Γ^T = M.
        factors[n] = m * hermitian_pinv(&gamma).transpose();
        grams[n] = factors[n].adjoint() * &factors[n];
    }
    KruskalModel::new(factors)
}

/// Previous iterate and iteration counter for [`als_line_search_step`].
#[derive(Debug, Clone)]
pub struct LineSearchHistory<T: Scalar> {
    prev: Option<KruskalModel<T>>,
    iter: usize,
}

impl<T: Scalar> Default for LineSearchHistory<T> {
    fn default() -> Self {
        Self { prev: None, iter: 0 }
    }
}

impl<T: Scalar> LineSearchHistory<T> {
    pub fn iter(&self) -> usize {
        self.iter
    }
}

/// ALS sweep followed by extrapolation from the previous iterate.
///
/// Candidates `A_prev + s (A_als - A_prev)` for `s` in `{1, 1.1, t^(1/3)}`;
/// the one with smallest relative error wins. `s = 1` is the plain sweep, so
/// the result never does worse than ALS. The first call is plain ALS.
pub fn als_line_search_step<T: Scalar>(
    y: &DenseTensor<T>,
    model: &KruskalModel<T>,
    history: &mut LineSearchHistory<T>,
) -> Result<KruskalModel<T>> {
    history.iter += 1;
    let als = als_step(y, model)?;
    let current = model.absorb_weights();
    let Some(prev) = history.prev.replace(current) else {
        return Ok(als);
    };
    let t = history.iter as f64;
    let mut best_err = relative_error(y, &als)?;
    let mut best = als.clone();
    for s in [1.1, t.cbrt()] {
        if s == 1.0 {
            continue;
        }
        let factors: Vec<Matrix<T>> = prev
            .factors()
            .iter()
            .zip(als.factors())
            .map(|(p, a)| p + (a - p) * T::from_real(s))
            .collect();
        let cand = KruskalModel::new(factors)?;
        let err = relative_error(y, &cand)?;
        if err < best_err {
            best_err = err;
            best = cand;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp::residual_norm2;
    use crate::init::random_init;
    use num_complex::Complex64;

    #[test]
    fn exact_fit_is_fixed_point() {
        let m: KruskalModel<f64> = random_init(&[4, 3, 5], 2, 1).unwrap();
        let y = m.reconstruct();
        let next = als_step(&y, &m).unwrap();
        for n in 0..3 {
            assert!((next.factor(n) - m.factor(n)).norm() < 1e-12 * m.factor(n).norm());
        }
    }

    #[test]
    fn two_way_matches_normal_equations() {
        let y: DenseTensor<f64> = random_init(&[5, 6], 4, 3).unwrap().reconstruct();
        let y = y.map(|x| x + 0.1);
        let m: KruskalModel<f64> = random_init(&[5, 6], 2, 4).unwrap();
        let next = als_step(&y, &m).unwrap();
        let ymat = y.unfold(0).unwrap();
        let b = m.factor(1);
        let a1 = &ymat * b * (b.transpose() * b).try_inverse().unwrap();
        let a2 = ymat.transpose() * &a1 * (a1.transpose() * &a1).try_inverse().unwrap();
        assert!((next.factor(0) - a1).norm() < 1e-10);
        assert!((next.factor(1) - a2).norm() < 1e-10);
    }

    #[test]
    fn sweeps_never_increase_error() {
        let y: DenseTensor<Complex64> = random_init(&[4, 5, 3], 3, 5).unwrap().reconstruct();
        let mut m: KruskalModel<Complex64> = random_init(&[4, 5, 3], 2, 6).unwrap();
        let mut e = residual_norm2(&y, &m).unwrap();
        for _ in 0..20 {
            m = als_step(&y, &m).unwrap();
            let e2 = residual_norm2(&y, &m).unwrap();
            assert!(e2 <= e * (1.0 + 1e-12));
            e = e2;
        }
    }

    #[test]
    fn line_search_first_step_is_plain_als() {
        let y: DenseTensor<f64> = random_init(&[4, 5, 3], 3, 5).unwrap().reconstruct();
        let m: KruskalModel<f64> = random_init(&[4, 5, 3], 2, 7).unwrap();
        let mut h = LineSearchHistory::default();
        assert_eq!(als_line_search_step(&y, &m, &mut h).unwrap(), als_step(&y, &m).unwrap());
    }

    #[test]
    fn line_search_never_worse_than_als() {
        let y: DenseTensor<f64> = random_init(&[4, 5, 3], 3, 5).unwrap().reconstruct();
        let mut m: KruskalModel<f64> = random_init(&[4, 5, 3], 3, 8).unwrap();
        let mut h = LineSearchHistory::default();
        for _ in 0..15 {
            let plain = relative_error(&y, &als_step(&y, &m).unwrap()).unwrap();
            m = als_line_search_step(&y, &m, &mut h).unwrap();
            assert!(relative_error(&y, &m).unwrap() <= plain);
        }
    }
}
