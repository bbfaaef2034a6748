//! The fast damped Gauss-Newton step and Nielsen damping control.
//!
//! For factors `A^(n)` and damping `μ` the step is assembled from
//!
//! * `A_μ^(n) = Y_(n) conj(KR_n) Γ̃^(n)^T` with `Γ̃^(n) = (Γ^(n) + μI)^{-1}`,
//! * `w_n = vec(A^(n)^H A_μ^(n) - C^(n) Γ^(n)^T Γ̃^(n)^T)`,
//! * `vec F = B_μ w` from the `Φ1` or `Φ2` system,
//! * `A^(n) ← A_μ^(n) + A^(n) (I - (F_n + Γ^(n)^T) Γ̃^(n)^T)`.
//!
//! Transposes on `Γ` vanish for real data, where every Gram product is symmetric.

use nalgebra::DVector;

use crate::cp::{mttkrp_factors, stack_blocks};
use crate::error::{CpError, Result};
use crate::gram::GramCache;
use crate::hessian::{assemble_phi, kernel_check, psi_blocks, PhiVariant};
use crate::kruskal::{check_model, KruskalModel};
use crate::linalg::{damped_inverse, lu_solve};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::Matrix;

/// Damping state carried between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct LmState {
    pub mu: f64,
    pub growth: f64,
    pub err_history: Vec<f64>,
    pub iter: usize,
    pub accepted: bool,
}

impl LmState {
    pub fn new(mu: f64) -> Self {
        Self { mu, growth: 2.0, err_history: Vec::new(), iter: 0, accepted: false }
    }
}

/// Nielsen's gain-ratio rule.
///
/// `ρ > 0`: `μ ← μ max(1/3, 1 - (2ρ - 1)^3)` and the growth factor resets to 2.
/// Otherwise `μ ← μ·growth` and the growth factor doubles.
pub fn nielsen_update(state: &LmState, rho: f64) -> LmState {
    let mut next = state.clone();
    next.iter += 1;
    if rho > 0.0 {
        next.mu *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
        next.growth = 2.0;
        next.accepted = true;
    } else {
        next.mu *= next.growth;
        next.growth *= 2.0;
        next.accepted = false;
    }
    next
}

/// `τ` times the largest diagonal entry of `H`, i.e. of any `Γ^(n)`.
///
/// Under the unit-norm convention for modes `1..N-1` this is `τ max(1, diag C^(N))`.
pub fn mu_init<T: Scalar>(cache: &GramCache<T>, tau: f64) -> f64 {
    let dmax = (0..cache.order())
        .flat_map(|n| cache.gamma_excl(n).diagonal().iter().map(|x| x.real()).collect::<Vec<_>>())
        .fold(0.0f64, f64::max);
    tau * dmax
}

/// How to obtain `B_μ w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BVariant {
    /// Always solve with `Φ1 = I + Ψ K`.
    FlmA,
    /// Solve with `Φ2 = K^{-1} + Ψ`; fails when `K` is singular.
    FlmB,
    /// `Φ2` when the kernel passes the invertibility test, `Φ1` otherwise.
    Auto,
}

/// Intermediate quantities of one fast step.
#[derive(Debug, Clone)]
pub struct FlmWork<T: Scalar> {
    pub mttkrp: Vec<Matrix<T>>,
    pub damped_factors: Vec<Matrix<T>>,
    pub gamma_tilde: Vec<Matrix<T>>,
    pub psi: Vec<Matrix<T>>,
    pub w: DVector<T>,
    pub f: Vec<Matrix<T>>,
    pub path: PhiVariant,
}

impl<T: Scalar> FlmWork<T> {
    /// `J^H vec(Y - Ŷ)` recovered from the stored MTTKRPs.
    pub fn gradient(&self, factors: &[Matrix<T>], cache: &GramCache<T>) -> DVector<T> {
        let blocks: Vec<Matrix<T>> = factors
            .iter()
            .enumerate()
            .map(|(n, a)| &self.mttkrp[n] - a * cache.gamma_excl(n).transpose())
            .collect();
        stack_blocks(&blocks)
    }
}

/// `Y_(n) conj(KR_n) (Γ^(n) + μI)^{-T}`; `μ = 0` gives the plain ALS update when `Γ^(n)` is nonsingular.
pub fn damped_als_factor<T: Scalar>(
    y: &DenseTensor<T>,
    model: &KruskalModel<T>,
    cache: &GramCache<T>,
    n: usize,
    mu: f64,
) -> Result<Matrix<T>> {
    check_model(y, model, n)?;
    let m = model.absorb_weights();
    let gt = damped_inverse(cache.gamma_excl(n), mu)?;
    Ok(mttkrp_factors(y, m.factors(), n)? * gt.transpose())
}

/// Stacked `w_n = vec(A^(n)^H A_μ^(n) - C^(n) Γ^(n)^T Γ̃^(n)^T)`.
pub fn compute_w<T: Scalar>(
    model: &KruskalModel<T>,
    cache: &GramCache<T>,
    damped_factors: &[Matrix<T>],
    mu: f64,
) -> Result<DVector<T>> {
    let gamma_tilde = (0..cache.order())
        .map(|n| damped_inverse(cache.gamma_excl(n), mu))
        .collect::<Result<Vec<_>>>()?;
    Ok(compute_w_with(model.absorb_weights().factors(), cache, damped_factors, &gamma_tilde))
}

fn compute_w_with<T: Scalar>(
    factors: &[Matrix<T>],
    cache: &GramCache<T>,
    damped: &[Matrix<T>],
    gamma_tilde: &[Matrix<T>],
) -> DVector<T> {
    let blocks: Vec<Matrix<T>> = factors
        .iter()
        .enumerate()
        .map(|(n, a)| {
            a.adjoint() * &damped[n]
                - cache.c(n) * cache.gamma_excl(n).transpose() * gamma_tilde[n].transpose()
        })
        .collect();
    stack_blocks(&blocks)
}

/// `K x` using `K^(n,m) x_m = vec((Γ^(n,m) ⊛ X_m)^T)`.
pub fn kernel_apply<T: Scalar>(cache: &GramCache<T>, x: &DVector<T>) -> DVector<T> {
    let (order, r) = (cache.order(), cache.rank());
    let r2 = r * r;
    let blocks: Vec<Matrix<T>> = (0..order)
        .map(|n| {
            let mut acc = Matrix::zeros(r, r);
            for m in (0..order).filter(|&m| m != n) {
                let xm = Matrix::from_column_slice(r, r, &x.as_slice()[m * r2..(m + 1) * r2]);
                acc += cache.gamma_pair(n, m).component_mul(&xm);
            }
            acc.transpose()
        })
        .collect();
    stack_blocks(&blocks)
}

/// Solution `vec F = B_μ w` split into `R x R` slices, and the path used.
pub fn solve_b<T: Scalar>(
    cache: &GramCache<T>,
    psi: &[Matrix<T>],
    w: &DVector<T>,
    variant: BVariant,
) -> Result<(Vec<Matrix<T>>, PhiVariant)> {
    let (order, r) = (cache.order(), cache.rank());
    if w.len() != order * r * r {
        return Err(CpError::ShapeMismatch(format!("w has length {}, expected {}", w.len(), order * r * r)));
    }
    let path = match variant {
        BVariant::FlmA => PhiVariant::Phi1,
        BVariant::FlmB | BVariant::Auto => {
            let check = kernel_check(cache);
            match (check.invertible, variant) {
                (true, _) => PhiVariant::Phi2,
                (false, BVariant::FlmB) => return Err(CpError::SingularKernel { ratio: check.ratio }),
                (false, _) => PhiVariant::Phi1,
            }
        }
    };
    let phi = assemble_phi(cache, psi, path)?;
    let rhs = Matrix::from_column_slice(w.len(), 1, w.as_slice());
    let sol = DVector::from_column_slice(lu_solve(&phi, &rhs)?.as_slice());
    let f = match path {
        PhiVariant::Phi1 => kernel_apply(cache, &sol),
        PhiVariant::Phi2 => sol,
    };
    let r2 = r * r;
    let slices = (0..order)
        .map(|n| Matrix::from_column_slice(r, r, &f.as_slice()[n * r2..(n + 1) * r2]))
        .collect();
    Ok((slices, path))
}

/// `A^(n) ← A_μ^(n) + A^(n) (I - (F_n + Γ^(n)^T) Γ̃^(n)^T)`.
pub fn flm_update<T: Scalar>(
    model: &KruskalModel<T>,
    damped_factors: &[Matrix<T>],
    f: &[Matrix<T>],
    cache: &GramCache<T>,
    mu: f64,
) -> Result<KruskalModel<T>> {
    let gamma_tilde = (0..cache.order())
        .map(|n| damped_inverse(cache.gamma_excl(n), mu))
        .collect::<Result<Vec<_>>>()?;
    update_with(model.absorb_weights().factors(), damped_factors, f, cache, &gamma_tilde)
}

pub(crate) fn update_with<T: Scalar>(
    factors: &[Matrix<T>],
    damped: &[Matrix<T>],
    f: &[Matrix<T>],
    cache: &GramCache<T>,
    gamma_tilde: &[Matrix<T>],
) -> Result<KruskalModel<T>> {
    let r = cache.rank();
    let id = Matrix::<T>::identity(r, r);
    let next = factors
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let inner = &id - (&f[n] + cache.gamma_excl(n).transpose()) * gamma_tilde[n].transpose();
            &damped[n] + a * inner
        })
        .collect();
    KruskalModel::new(next)
}

/// All intermediate quantities of the fast step at `(model, μ)`.
///
/// `cache` must belong to the weight-absorbed model.
pub fn flm_work<T: Scalar>(
    y: &DenseTensor<T>,
    model: &KruskalModel<T>,
    cache: &GramCache<T>,
    mu: f64,
    variant: BVariant,
) -> Result<FlmWork<T>> {
    check_model(y, model, 0)?;
    if mu.is_nan() || mu <= 0.0 {
        return Err(CpError::InvalidArgument(format!("damping must be positive, got {mu}")));
    }
    let m = model.absorb_weights();
    let factors = m.factors();
    let mut mttkrp = Vec::with_capacity(factors.len());
    let mut damped = Vec::with_capacity(factors.len());
    let mut gamma_tilde = Vec::with_capacity(factors.len());
    for n in 0..factors.len() {
        let mt = mttkrp_factors(y, factors, n)?;
        let gt = damped_inverse(cache.gamma_excl(n), mu)?;
        damped.push(&mt * gt.transpose());
        mttkrp.push(mt);
        gamma_tilde.push(gt);
    }
    let w = compute_w_with(factors, cache, &damped, &gamma_tilde);
    let psi = psi_blocks(cache, &gamma_tilde);
    let (f, path) = solve_b(cache, &psi, &w, variant)?;
    Ok(FlmWork { mttkrp, damped_factors: damped, gamma_tilde, psi, w, f, path })
}

/// Candidate model from one fast damped Gauss-Newton step.
#[derive(Debug, Clone)]
pub struct FlmStep<T: Scalar> {
    pub candidate: KruskalModel<T>,
    pub work: FlmWork<T>,
    pub cache: GramCache<T>,
}

pub fn flm_step<T: Scalar>(
    y: &DenseTensor<T>,
    model: &KruskalModel<T>,
    mu: f64,
    variant: BVariant,
) -> Result<FlmStep<T>> {
    let m = model.absorb_weights();
    let cache = GramCache::from_factors(m.factors());
    let work = flm_work(y, &m, &cache, mu, variant)?;
    let candidate = update_with(m.factors(), &work.damped_factors, &work.f, &cache, &work.gamma_tilde)?;
    Ok(FlmStep { candidate, work, cache })
}
