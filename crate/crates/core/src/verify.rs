//! Self-check of the fast kernels against dense oracles on small random models.
//!
//! Each identity is evaluated on `seeds` seeded instances with `N ∈ {2,3,4}`,
//! `I_n ∈ [2,6]`, `R ∈ [1,3]`, alternating real and complex scalars. With
//! `perturb` set, every fast-side result is scaled by `1 + 1e-4` before the
//! comparison, so a healthy suite must then fail.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::cp::{gradient, residual_norm2};
use crate::error::Result;
use crate::flm::{flm_step, BVariant};
use crate::gram::GramCache;
use crate::hessian::{
    assemble_hessian, assemble_phi, build_parts, count_nonzeros, dense_damped_solve, fast_damped_inverse, jacobian,
    kernel_check, kernel_inverse, kernel_matrix, phi_density, psi_blocks, PhiVariant,
};
use crate::init::random_init;
use crate::kruskal::KruskalModel;
use crate::linalg::{damped_inverse, rel_diff};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::synth::{descending_eigenvalues, gen_collinear, sigma_matrix, spectrum, CollinearSpec};
use crate::tensor::DenseTensor;
use crate::Matrix;

/// Damping values used for the structured inverse.
pub const INVERSE_MUS: [f64; 4] = [1e-6, 1e-2, 1.0, 1e3];
const PERTURBATION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seeds: usize,
    pub base_seed: u64,
    pub perturb: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seeds: 20, base_seed: 0, perturb: false }
    }
}

/// Worst observed error of one identity over all instances.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub description: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    fn new(name: &'static str, description: &'static str, tolerance: f64) -> Self {
        Self { name, description, cases: 0, max_error: 0.0, tolerance }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        // NaN must fail, so it overrides any finite maximum.
        if err.is_nan() || err > self.max_error {
            self.max_error = if err.is_nan() { f64::INFINITY } else { err };
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.max_error <= self.tolerance
    }
}

/// Random instance shape for trial `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub complex: bool,
    pub seed: u64,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = stream_rng(seed, Stream::Factors);
    let order = rng.random_range(2..=4);
    let dims = (0..order).map(|_| rng.random_range(2..=6)).collect();
    let rank = rng.random_range(1..=3);
    Instance { dims, rank, complex: seed % 2 == 1, seed }
}

/// Unit-norm-column model and a data tensor for step checks (a rank-`R+1`
/// tensor plus a constant offset).
///
/// Columns are normalized so that `||H||` stays near the parameter count and
/// the fixed damping values probe the same relative regime on every instance.
pub fn instance_data<T: Scalar>(inst: &Instance) -> Result<(KruskalModel<T>, DenseTensor<T>)> {
    let raw: KruskalModel<T> = random_init(&inst.dims, inst.rank, inst.seed)?;
    let model = KruskalModel::new(
        raw.factors()
            .iter()
            .map(|f| {
                let mut f = f.clone();
                for mut c in f.column_iter_mut() {
                    let norm = c.norm();
                    c /= T::from_real(norm);
                }
                f
            })
            .collect(),
    )?;
    let y = random_init::<T>(&inst.dims, inst.rank + 1, inst.seed.wrapping_add(1 << 32))?
        .reconstruct()
        .map(|x| x + T::from_real(0.1));
    Ok((model, y))
}

struct Suite {
    hessian: IdentityCheck,
    low_rank: IdentityCheck,
    inverse: IdentityCheck,
    inverse_storage: IdentityCheck,
    step: IdentityCheck,
    variants: IdentityCheck,
    kernel: IdentityCheck,
    gradient: IdentityCheck,
    scale: f64,
}

impl Suite {
    fn new(perturb: bool) -> Self {
        Self {
            hessian: IdentityCheck::new("hessian_blocks", "blockwise H equals J^H J", 1e-10),
            low_rank: IdentityCheck::new("low_rank_adjustment", "H equals G + Z K Z^H", 1e-12),
            inverse: IdentityCheck::new("structured_inverse", "structured (H + μI)^-1 equals the dense inverse", 1e-8),
            inverse_storage: IdentityCheck::new("inverse_storage", "structured inverse stores N R^2 + N^2 R^4 scalars", 0.0),
            step: IdentityCheck::new("step_equivalence", "fast damped step equals the dense step", 1e-8),
            variants: IdentityCheck::new("variant_agreement", "Φ1 and Φ2 steps agree when K is invertible", 1e-9),
            kernel: IdentityCheck::new("kernel_inverse", "K times its closed-form inverse is I", 1e-10),
            gradient: IdentityCheck::new("gradient_fd", "analytic gradient equals central differences", 1e-5),
            scale: if perturb { 1.0 + PERTURBATION } else { 1.0 },
        }
    }

    fn run<T: Scalar>(&mut self, inst: &Instance) -> Result<()> {
        let (model, y) = instance_data::<T>(inst)?;
        let cache = GramCache::from_factors(model.factors());
        let s = T::from_real(self.scale);

        let j = jacobian(&model)?;
        let jhj = j.adjoint() * &j;
        let h = assemble_hessian(&cache, model.factors())?;
        self.hessian.record(rel_diff(&(&h * s), &jhj));
        let parts = build_parts(&cache, model.factors())?;
        self.low_rank.record(rel_diff(&(parts.assemble() * s), &h));

        for mu in INVERSE_MUS {
            let inv = fast_damped_inverse(&cache, model.factors(), mu)?;
            let mut hm = jhj.clone();
            for i in 0..hm.nrows() {
                hm[(i, i)] += T::from_real(mu);
            }
            let dense = hm.lu().try_inverse().unwrap_or_else(|| Matrix::from_element(1, 1, T::from_real(f64::NAN)));
            self.inverse.record(rel_diff(&(inv.materialize(model.factors())? * s), &dense));
            let (n, r) = (model.order(), model.rank());
            let want = n * r * r + n * n * r.pow(4);
            self.inverse_storage.record((inv.storage_len() as f64 * self.scale - want as f64).abs());
        }

        let mu = 0.1;
        let dense = model.to_vec() + dense_damped_solve(&y, &model, mu)?;
        let a = flm_step(&y, &model, mu, BVariant::FlmA)?.candidate.to_vec() * s;
        self.step.record(rel_vec(&a, &dense));
        if kernel_check(&cache).invertible {
            let b = flm_step(&y, &model, mu, BVariant::FlmB)?.candidate.to_vec();
            self.step.record(rel_vec(&(&b * s), &dense));
            self.variants.record(rel_vec(&a, &b));
            let k = kernel_matrix(&cache);
            let prod = &k * kernel_inverse(&cache)? * s;
            self.kernel.record((prod - Matrix::identity(k.nrows(), k.ncols())).norm());
        }

        let g = gradient(&y, &model)? * s;
        self.gradient.record(rel_vec(&(g * T::from_real(-2.0)), &finite_difference(&y, &model)?));
        Ok(())
    }
}

fn rel_vec<T: Scalar>(a: &DVector<T>, b: &DVector<T>) -> f64 {
    let d = (a - b).norm();
    let n = b.norm();
    if n > 0.0 { d / n } else { d }
}

/// Central differences of `||Y - M(x)||^2` with `h = 1e-6`; for complex
/// parameters the real and imaginary parts are differenced separately and
/// combined as `∂/∂Re + i ∂/∂Im`, which equals `-2 J^H vec(E)`.
pub fn finite_difference<T: Scalar>(y: &DenseTensor<T>, model: &KruskalModel<T>) -> Result<DVector<T>> {
    let h = 1e-6;
    let x = model.to_vec();
    let dims = model.dims();
    let f = |v: &DVector<T>| -> Result<f64> {
        residual_norm2(y, &KruskalModel::from_vec(&dims, model.rank(), v.as_slice())?)
    };
    let mut out = DVector::zeros(x.len());
    for k in 0..x.len() {
        let mut d = [0.0; 2];
        for (part, step) in [T::from_real(h), T::from_parts(0.0, h)].into_iter().enumerate() {
            if part == 1 && T::KIND == crate::scalar::ScalarKind::Real {
                break;
            }
            let mut xp = x.clone();
            xp[k] += step;
            let mut xm = x.clone();
            xm[k] -= step;
            d[part] = (f(&xp)? - f(&xm)?) / (2.0 * h);
        }
        out[k] = T::from_parts(d[0], d[1]);
    }
    Ok(out)
}

/// Exact nonzero fraction of assembled `Φ1`/`Φ2` against the closed form.
pub fn density_check(configs: &[(usize, usize)], seed: u64, perturb: bool) -> Result<IdentityCheck> {
    let mut check = IdentityCheck::new("phi_density", "nonzero fraction of Φ1 and Φ2 equals the closed form", 0.0);
    for &(order, rank) in configs {
        let model: KruskalModel<f64> = random_init(&vec![rank + 2; order], rank, seed)?;
        let cache = GramCache::from_factors(model.factors());
        let gamma_tilde = (0..order).map(|n| damped_inverse(cache.gamma_excl(n), 0.1)).collect::<Result<Vec<_>>>()?;
        let psi = psi_blocks(&cache, &gamma_tilde);
        for variant in [PhiVariant::Phi1, PhiVariant::Phi2] {
            let phi = assemble_phi(&cache, &psi, variant)?;
            let nnz = count_nonzeros(&phi) as u64 + u64::from(perturb);
            let total = (phi.nrows() * phi.ncols()) as u64;
            let d = phi_density(order, rank, variant)?;
            check.record(if d.matches(nnz, total) { 0.0 } else { (nnz as f64 / total as f64 - d.value()).abs() });
        }
    }
    Ok(check)
}

/// Closed-form collinear spectrum against dense eigenvalues of `Σ`, plus the
/// sum and product identities of the two outer roots.
pub fn spectrum_check(perturb: bool) -> Result<IdentityCheck> {
    let mut check = IdentityCheck::new("collinear_spectrum", "closed-form eigenvalues of Σ equal the dense ones", 1e-10);
    let scale = if perturb { 1.0 + PERTURBATION } else { 1.0 };
    for rank in 2..=6 {
        for order in 2..=5 {
            for nu in [0.1, 0.3, 0.5, 1.0, 3.0] {
                let rep = spectrum(rank.max(2), rank, order, nu, f64::INFINITY)?;
                let ev = descending_eigenvalues(&sigma_matrix(rank, order, nu));
                let mut want = vec![rep.lam_max * scale];
                want.extend(std::iter::repeat_n(rep.lam_mid, rank - 2));
                want.push(rep.lam_min);
                let err = ev.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / rep.lam_max;
                let (x, y, r) = (rep.x, rep.y, rank as f64);
                let sum = (rep.lam_max * scale + rep.lam_min - (x * y + (r - 2.0) * (r + x + y) + 3.0)).abs();
                let prod = (rep.lam_max * scale * rep.lam_min - (x - 1.0) * (y - 1.0)).abs();
                check.record(err.max(sum / rep.lam_max).max(prod / rep.lam_mid.max(f64::MIN_POSITIVE)));
            }
        }
    }
    Ok(check)
}

/// Leading eigenvalues of `Y_(1) Y_(1)^T` for generated noiseless tensors.
pub fn empirical_spectrum_check(seed: u64, perturb: bool) -> Result<IdentityCheck> {
    let mut check =
        IdentityCheck::new("collinear_unfolding_spectrum", "spectrum of a generated unfolding equals the closed form", 1e-6);
    let scale = if perturb { 1.0 + PERTURBATION } else { 1.0 };
    for (size, rank, order, nu) in [(8, 3, 3, 0.5), (6, 4, 3, 0.3), (5, 2, 4, 0.8), (10, 5, 3, 1.0)] {
        let g = gen_collinear::<f64>(&CollinearSpec { dims: vec![size; order], rank, nu, snr_db: None, seed })?;
        let y = g.tensor.unfold(0)?;
        let ev = descending_eigenvalues(&(&y * y.transpose()));
        let rep = spectrum(size, rank, order, nu, f64::INFINITY)?;
        let mut want = vec![rep.lam_max * scale];
        want.extend(std::iter::repeat_n(rep.lam_mid, rank - 2));
        want.push(rep.lam_min);
        for (a, b) in ev.iter().zip(&want) {
            check.record((a - b).abs() / b.abs());
        }
    }
    Ok(check)
}

/// Every identity over `config.seeds` instances.
pub fn run_suite(config: &VerifyConfig) -> Result<Vec<IdentityCheck>> {
    let mut suite = Suite::new(config.perturb);
    for k in 0..config.seeds as u64 {
        let inst = random_instance(config.base_seed.wrapping_add(k));
        if inst.complex {
            suite.run::<Complex64>(&inst)?;
        } else {
            suite.run::<f64>(&inst)?;
        }
    }
    let Suite { hessian, low_rank, inverse, inverse_storage, step, variants, kernel, gradient, .. } = suite;
    Ok(vec![
        hessian,
        low_rank,
        inverse,
        inverse_storage,
        step,
        variants,
        kernel,
        gradient,
        density_check(&[(3, 2), (4, 3), (5, 3)], config.base_seed, config.perturb)?,
        spectrum_check(config.perturb)?,
        empirical_spectrum_check(config.base_seed, config.perturb)?,
    ])
}
