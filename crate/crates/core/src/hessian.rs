//! Explicit Jacobian and approximate Hessian, plus their structured forms.
//!
//! The Hessian `H = J^H J` splits as `G + Z K Z^H` with
//! `G = blkdiag(Γ^(n) ⊗ I)`, `Z = blkdiag(I_R ⊗ A^(n))` and a kernel `K` of
//! `R^2 x R^2` blocks `K^(n,m) = P_R diag(vec Γ^(n,m))` (zero for `n = m`).
//! Dense routines here are verification oracles and refuse large inputs.

use nalgebra::DVector;

use crate::error::{CpError, Result};
use crate::gram::GramCache;
use crate::kruskal::KruskalModel;
use crate::linalg::{damped_inverse, lu_inverse};
use crate::products::{commutation, khatri_rao_excl, kronecker, mode_commutation};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::Matrix;

pub const ORACLE_MAX_JACOBIAN_ENTRIES: usize = 10_000_000;
pub const ORACLE_MAX_PARAMS: usize = 3000;
/// Kernel `K` counts as invertible when every off-diagonal `|Γ^(n,m)|` entry
/// exceeds this fraction of the largest one.
pub const KERNEL_RELATIVE_CUTOFF: f64 = 1e-10;

/// Refuse dense oracle work beyond desk scale.
pub fn check_oracle_size(dims: &[usize], rank: usize) -> Result<()> {
    let j: usize = dims.iter().product();
    let params = rank * dims.iter().sum::<usize>();
    let entries = j.saturating_mul(params);
    if entries > ORACLE_MAX_JACOBIAN_ENTRIES || params > ORACLE_MAX_PARAMS {
        return Err(CpError::SizeGuard { jacobian_entries: entries, params });
    }
    Ok(())
}

/// `J = [Q_1 (KR_1 ⊗ I), ..., Q_N (KR_N ⊗ I)]`, the derivative of `vec Ŷ`
/// with respect to the stacked factor entries.
pub fn jacobian<T: Scalar>(model: &KruskalModel<T>) -> Result<Matrix<T>> {
    let dims = model.dims();
    let rank = model.rank();
    check_oracle_size(&dims, rank)?;
    let m = model.absorb_weights();
    let j: usize = dims.iter().product();
    let mut out = Matrix::zeros(j, model.num_params());
    let mut col = 0;
    for (n, &i_n) in dims.iter().enumerate() {
        let kr = khatri_rao_excl(m.factors(), n)?;
        let block = kronecker(&kr, &Matrix::identity(i_n, i_n));
        let q = mode_commutation(&dims, n)?;
        out.columns_mut(col, rank * i_n).copy_from(&q.apply_rows(&block));
        col += rank * i_n;
    }
    Ok(out)
}

/// `K^(n,m) = P_R diag(vec Γ^(n,m))` for `n ≠ m`, zero on the diagonal.
pub fn kernel_block<T: Scalar>(cache: &GramCache<T>, n: usize, m: usize) -> Matrix<T> {
    let r = cache.rank();
    let mut k = Matrix::zeros(r * r, r * r);
    if n != m {
        let v = cache.gamma_pair(n, m);
        for (i, &j) in commutation(r, r).map().iter().enumerate() {
            k[(i, j)] = v[j];
        }
    }
    k
}

pub fn kernel_matrix<T: Scalar>(cache: &GramCache<T>) -> Matrix<T> {
    let (order, r2) = (cache.order(), cache.rank() * cache.rank());
    let mut k = Matrix::zeros(order * r2, order * r2);
    for n in 0..order {
        for m in 0..order {
            if n != m {
                k.view_mut((n * r2, m * r2), (r2, r2)).copy_from(&kernel_block(cache, n, m));
            }
        }
    }
    k
}

/// Block `(n, m)` of `H`: `δ (Γ^(n) ⊗ I) + (I_R ⊗ A^(n)) K^(n,m) (I_R ⊗ A^(m)^H)`.
pub fn hessian_block<T: Scalar>(
    cache: &GramCache<T>,
    factors: &[Matrix<T>],
    n: usize,
    m: usize,
) -> Result<Matrix<T>> {
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    check_oracle_size(&dims, cache.rank())?;
    let r = cache.rank();
    let id = Matrix::identity(r, r);
    if n == m {
        return Ok(kronecker(cache.gamma_excl(n), &Matrix::identity(dims[n], dims[n])));
    }
    let zn = kronecker(&id, &factors[n]);
    let zm = kronecker(&id, &factors[m].adjoint());
    Ok(zn * kernel_block(cache, n, m) * zm)
}

/// `H` assembled block by block.
pub fn assemble_hessian<T: Scalar>(cache: &GramCache<T>, factors: &[Matrix<T>]) -> Result<Matrix<T>> {
    let r = cache.rank();
    let offsets = block_offsets(factors, r);
    let total = *offsets.last().expect("nonempty");
    let mut h = Matrix::zeros(total, total);
    for n in 0..factors.len() {
        for m in 0..factors.len() {
            let b = hessian_block(cache, factors, n, m)?;
            h.view_mut((offsets[n], offsets[m]), b.shape()).copy_from(&b);
        }
    }
    Ok(h)
}

fn block_offsets<T: Scalar>(factors: &[Matrix<T>], r: usize) -> Vec<usize> {
    let mut offsets = vec![0];
    for f in factors {
        offsets.push(offsets.last().unwrap() + r * f.nrows());
    }
    offsets
}

/// Dense pieces of `H = G + Z K Z^H`.
#[derive(Debug, Clone)]
pub struct HessianParts<T: Scalar> {
    pub g: Matrix<T>,
    pub z: Matrix<T>,
    pub k: Matrix<T>,
    /// `T = sum_n I_n`.
    pub t: usize,
}

impl<T: Scalar> HessianParts<T> {
    pub fn assemble(&self) -> Matrix<T> {
        &self.g + &self.z * &self.k * self.z.adjoint()
    }
}

pub fn build_parts<T: Scalar>(cache: &GramCache<T>, factors: &[Matrix<T>]) -> Result<HessianParts<T>> {
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let r = cache.rank();
    check_oracle_size(&dims, r)?;
    let t: usize = dims.iter().sum();
    let order = factors.len();
    let mut g = Matrix::zeros(r * t, r * t);
    let mut z = Matrix::zeros(r * t, order * r * r);
    let id = Matrix::identity(r, r);
    let mut off = 0;
    for (n, f) in factors.iter().enumerate() {
        let i_n = f.nrows();
        let gb = kronecker(cache.gamma_excl(n), &Matrix::identity(i_n, i_n));
        g.view_mut((off, off), gb.shape()).copy_from(&gb);
        let zb = kronecker(&id, f);
        z.view_mut((off, n * r * r), zb.shape()).copy_from(&zb);
        off += r * i_n;
    }
    Ok(HessianParts { g, z, k: kernel_matrix(cache), t })
}

/// Outcome of the kernel invertibility test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCheck {
    pub invertible: bool,
    /// `min |Γ^(n,m)_{rs}| / max |Γ^(n,m)_{rs}|` over `n ≠ m`.
    pub ratio: f64,
}

pub fn kernel_check<T: Scalar>(cache: &GramCache<T>) -> KernelCheck {
    let order = cache.order();
    if order < 2 {
        return KernelCheck { invertible: false, ratio: 0.0 };
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for n in 0..order {
        for m in n + 1..order {
            for x in cache.gamma_pair(n, m).iter() {
                let a = x.modulus();
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
    }
    let ratio = if hi > 0.0 && hi.is_finite() { lo / hi } else { 0.0 };
    KernelCheck { invertible: ratio > KERNEL_RELATIVE_CUTOFF, ratio }
}

/// `K̃^(n,m) = (1/(N-1) - δ) diag(vec(C^(n) ⊛ C^(m) ⊘ Γ)) P_R`.
pub fn kernel_inverse_block<T: Scalar>(cache: &GramCache<T>, n: usize, m: usize) -> Result<Matrix<T>> {
    let order = cache.order();
    let r = cache.rank();
    let coef = 1.0 / (order as f64 - 1.0) - if n == m { 1.0 } else { 0.0 };
    let mut out = Matrix::zeros(r * r, r * r);
    if coef == 0.0 {
        return Ok(out);
    }
    let num = cache.c(n).component_mul(cache.c(m));
    let u = crate::products::elementwise_div(&num, cache.gamma_full())?;
    for (i, &j) in commutation(r, r).map().iter().enumerate() {
        out[(i, j)] = u[i] * T::from_real(coef);
    }
    Ok(out)
}

/// Closed-form `K^{-1}`; requires `N ≥ 2` and a kernel passing [`kernel_check`].
pub fn kernel_inverse<T: Scalar>(cache: &GramCache<T>) -> Result<Matrix<T>> {
    let order = cache.order();
    if order < 2 {
        return Err(CpError::InvalidArgument("kernel inverse needs order ≥ 2".into()));
    }
    let check = kernel_check(cache);
    if !check.invertible {
        return Err(CpError::SingularKernel { ratio: check.ratio });
    }
    let r2 = cache.rank() * cache.rank();
    let mut out = Matrix::zeros(order * r2, order * r2);
    for n in 0..order {
        for m in 0..order {
            let b = kernel_inverse_block(cache, n, m)?;
            out.view_mut((n * r2, m * r2), (r2, r2)).copy_from(&b);
        }
    }
    Ok(out)
}

/// `J^H vec(Y - Ŷ)` from the explicit Jacobian.
pub fn dense_gradient<T: Scalar>(y: &DenseTensor<T>, model: &KruskalModel<T>) -> Result<DVector<T>> {
    model.check_dims(y.dims())?;
    let j = jacobian(model)?;
    let e = y.sub(&model.reconstruct())?.vectorize();
    Ok(j.adjoint() * e)
}

/// Solve `(J^H J + μ I) Δ = J^H vec(Y - Ŷ)` with a dense LU factorization.
pub fn dense_damped_solve<T: Scalar>(
    y: &DenseTensor<T>,
    model: &KruskalModel<T>,
    mu: f64,
) -> Result<DVector<T>> {
    model.check_dims(y.dims())?;
    if mu.is_nan() || mu <= 0.0 {
        return Err(CpError::InvalidArgument(format!("damping must be positive, got {mu}")));
    }
    let j = jacobian(model)?;
    let e = y.sub(&model.reconstruct())?.vectorize();
    let g = j.adjoint() * e;
    let mut h = j.adjoint() * &j;
    for i in 0..h.nrows() {
        h[(i, i)] += T::from_real(mu);
    }
    h.lu()
        .solve(&g)
        .ok_or_else(|| CpError::Singular("dense damped Hessian".into()))
}

/// Which small system yields `B_μ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhiVariant {
    /// `Φ1 = I + Ψ K`, always available: `B = K Φ1^{-1}`.
    Phi1,
    /// `Φ2 = K^{-1} + Ψ`, needs invertible `K`: `B = Φ2^{-1}`.
    Phi2,
}

/// `Ψ_n = Γ̃^(n) ⊗ C^(n)`.
pub fn psi_blocks<T: Scalar>(cache: &GramCache<T>, gamma_tilde: &[Matrix<T>]) -> Vec<Matrix<T>> {
    gamma_tilde
        .iter()
        .enumerate()
        .map(|(n, gt)| kronecker(gt, cache.c(n)))
        .collect()
}

/// Assemble `Φ1` or `Φ2`, skipping structurally zero block products.
pub fn assemble_phi<T: Scalar>(cache: &GramCache<T>, psi: &[Matrix<T>], variant: PhiVariant) -> Result<Matrix<T>> {
    let order = cache.order();
    let r = cache.rank();
    let r2 = r * r;
    let p = commutation(r, r);
    let mut phi = Matrix::zeros(order * r2, order * r2);
    for n in 0..order {
        for m in 0..order {
            let mut block = phi.view_mut((n * r2, m * r2), (r2, r2));
            match variant {
                PhiVariant::Phi1 if n == m => block.fill_with_identity(),
                PhiVariant::Phi1 => {
                    // Ψ_n P_R diag(v): column j is v_j times column P^{-1}(j) of Ψ_n.
                    let v = cache.gamma_pair(n, m);
                    for (i, &j) in p.map().iter().enumerate() {
                        block.column_mut(j).copy_from(&(psi[n].column(i) * v[j]));
                    }
                }
                PhiVariant::Phi2 => {
                    block.copy_from(&kernel_inverse_block(cache, n, m)?);
                    if n == m {
                        block += &psi[n];
                    }
                }
            }
        }
    }
    Ok(phi)
}

/// Dense `B_μ` via the requested small system.
pub fn b_matrix<T: Scalar>(cache: &GramCache<T>, psi: &[Matrix<T>], variant: PhiVariant) -> Result<Matrix<T>> {
    let phi = assemble_phi(cache, psi, variant)?;
    let inv = lu_inverse(&phi)?;
    Ok(match variant {
        PhiVariant::Phi1 => kernel_matrix(cache) * inv,
        PhiVariant::Phi2 => inv,
    })
}

/// `H_μ^{-1}` kept as `{Γ̃^(n)}` and `S̃^(n,m) = (Γ̃^(n) ⊗ I) B^(n,m) (Γ̃^(m) ⊗ I)`.
///
/// Block `(n, m)` of the inverse is
/// `δ (Γ̃^(n) ⊗ I) - (I_R ⊗ A^(n)) S̃^(n,m) (I_R ⊗ A^(m)^H)`.
#[derive(Debug, Clone)]
pub struct StructuredInverse<T: Scalar> {
    gamma_tilde: Vec<Matrix<T>>,
    s: Vec<Matrix<T>>,
    mu: f64,
    path: PhiVariant,
}

impl<T: Scalar> StructuredInverse<T> {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn path(&self) -> PhiVariant {
        self.path
    }

    pub fn order(&self) -> usize {
        self.gamma_tilde.len()
    }

    pub fn gamma_tilde(&self, n: usize) -> &Matrix<T> {
        &self.gamma_tilde[n]
    }

    pub fn s_block(&self, n: usize, m: usize) -> &Matrix<T> {
        &self.s[n * self.order() + m]
    }

    /// Stored scalar count, excluding `μ`.
    pub fn storage_len(&self) -> usize {
        self.gamma_tilde.iter().chain(&self.s).map(|m| m.len()).sum()
    }

    /// Dense `(H + μI)^{-1}`, oracle scale only.
    pub fn materialize(&self, factors: &[Matrix<T>]) -> Result<Matrix<T>> {
        let r = self.gamma_tilde[0].nrows();
        let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
        check_oracle_size(&dims, r)?;
        let offsets = block_offsets(factors, r);
        let total = *offsets.last().unwrap();
        let id = Matrix::identity(r, r);
        let mut out = Matrix::zeros(total, total);
        for n in 0..factors.len() {
            let zn = kronecker(&id, &factors[n]);
            for m in 0..factors.len() {
                let zm = kronecker(&id, &factors[m].adjoint());
                let mut b = -(&zn * self.s_block(n, m) * zm);
                if n == m {
                    b += kronecker(&self.gamma_tilde[n], &Matrix::identity(dims[n], dims[n]));
                }
                out.view_mut((offsets[n], offsets[m]), b.shape()).copy_from(&b);
            }
        }
        Ok(out)
    }

    /// `(H + μI)^{-1} v` without forming the inverse.
    pub fn apply(&self, factors: &[Matrix<T>], v: &DVector<T>) -> Result<DVector<T>> {
        let r = self.gamma_tilde[0].nrows();
        let offsets = block_offsets(factors, r);
        if v.len() != *offsets.last().unwrap() {
            return Err(CpError::ShapeMismatch(format!("vector of length {}", v.len())));
        }
        let blocks: Vec<Matrix<T>> = factors
            .iter()
            .enumerate()
            .map(|(n, f)| Matrix::from_column_slice(f.nrows(), r, &v.as_slice()[offsets[n]..offsets[n + 1]]))
            .collect();
        let projected: Vec<DVector<T>> = factors
            .iter()
            .zip(&blocks)
            .map(|(f, b)| DVector::from_column_slice((f.adjoint() * b).as_slice()))
            .collect();
        let mut out = Vec::with_capacity(v.len());
        for (n, f) in factors.iter().enumerate() {
            let mut acc = DVector::zeros(r * r);
            for (m, pm) in projected.iter().enumerate() {
                acc += self.s_block(n, m) * pm;
            }
            let x = Matrix::from_column_slice(r, r, acc.as_slice());
            let block = &blocks[n] * self.gamma_tilde[n].transpose() - f * x;
            out.extend(block.iter().copied());
        }
        Ok(DVector::from_vec(out))
    }
}

/// Structured inverse of `H + μI` through the Woodbury identity.
///
/// Uses `Φ2` when the kernel passes [`kernel_check`] and falls back to `Φ1`
/// otherwise or when the `Φ2` factorization breaks down.
pub fn fast_damped_inverse<T: Scalar>(
    cache: &GramCache<T>,
    factors: &[Matrix<T>],
    mu: f64,
) -> Result<StructuredInverse<T>> {
    let path = if kernel_check(cache).invertible { PhiVariant::Phi2 } else { PhiVariant::Phi1 };
    match fast_damped_inverse_with(cache, factors, mu, path) {
        Err(CpError::Singular(_)) if path == PhiVariant::Phi2 => {
            fast_damped_inverse_with(cache, factors, mu, PhiVariant::Phi1)
        }
        other => other,
    }
}

/// [`fast_damped_inverse`] through a fixed small system.
pub fn fast_damped_inverse_with<T: Scalar>(
    cache: &GramCache<T>,
    factors: &[Matrix<T>],
    mu: f64,
    path: PhiVariant,
) -> Result<StructuredInverse<T>> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(CpError::InvalidArgument(format!("damping must be positive, got {mu}")));
    }
    if factors.len() != cache.order() || factors.iter().any(|f| f.ncols() != cache.rank()) {
        return Err(CpError::ShapeMismatch("factors do not match the Gram cache".into()));
    }
    let gamma_tilde: Vec<Matrix<T>> = (0..cache.order())
        .map(|n| damped_inverse(cache.gamma_excl(n), mu))
        .collect::<Result<_>>()?;
    let order = cache.order();
    let r = cache.rank();
    let r2 = r * r;
    let id = Matrix::identity(r, r);
    // With D = blkdiag(Γ̃^(n) ⊗ I) and E = blkdiag(I ⊗ C^(n)), Ψ = D E and S̃ = D B D.
    // Both forms below keep D^{-1} inside the solve; multiplying a solved B by D
    // twice loses every digit when some Γ^(n) is (nearly) singular.
    let d: Vec<Matrix<T>> = gamma_tilde.iter().map(|g| kronecker(g, &id)).collect();
    let damped: Vec<Matrix<T>> = (0..order)
        .map(|n| cache.gamma_excl(n) + Matrix::identity(r, r) * T::from_real(mu))
        .collect();
    let d_inv: Vec<Matrix<T>> = damped.iter().map(|m| kronecker(m, &id)).collect();
    let size = order * r2;
    let full = match path {
        PhiVariant::Phi2 => {
            // S̃ = (D^{-1} K̃ D^{-1} + blkdiag((Γ^(n) + μI) ⊗ C^(n)))^{-1}
            let mut sys = Matrix::zeros(size, size);
            for n in 0..order {
                for m in 0..order {
                    let mut block = &d_inv[n] * kernel_inverse_block(cache, n, m)? * &d_inv[m];
                    if n == m {
                        block += kronecker(&damped[n], cache.c(n));
                    }
                    sys.view_mut((n * r2, m * r2), (r2, r2)).copy_from(&block);
                }
            }
            lu_inverse(&sys)?
        }
        PhiVariant::Phi1 => {
            // S̃ = D K (D^{-1} + E K)^{-1}
            let k = kernel_matrix(cache);
            let mut sys = Matrix::zeros(size, size);
            let mut dk = Matrix::zeros(size, size);
            for n in 0..order {
                let rows = k.rows(n * r2, r2);
                let e = kronecker(&id, cache.c(n));
                sys.rows_mut(n * r2, r2).copy_from(&(e * rows));
                let mut diag = sys.view_mut((n * r2, n * r2), (r2, r2));
                diag += &d_inv[n];
                dk.rows_mut(n * r2, r2).copy_from(&(&d[n] * rows));
            }
            dk * lu_inverse(&sys)?
        }
    };
    let s = (0..order * order)
        .map(|nm| full.view(((nm / order) * r2, (nm % order) * r2), (r2, r2)).into_owned())
        .collect();
    Ok(StructuredInverse { gamma_tilde, s, mu, path })
}

/// Density of `Φ1` or `Φ2` as the unreduced fraction from its block pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Density {
    pub numerator: u64,
    pub denominator: u64,
}

impl Density {
    pub fn value(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn reduced(self) -> (u64, u64) {
        let g = gcd(self.numerator, self.denominator);
        (self.numerator / g, self.denominator / g)
    }

    /// `nonzeros / total == numerator / denominator`, exactly.
    pub fn matches(self, nonzeros: u64, total: u64) -> bool {
        nonzeros as u128 * self.denominator as u128 == self.numerator as u128 * total as u128
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// `((N-1)R^2 + 1)/(N R^2)` for `Φ1`, `(R^2 + N - 1)/(N R^2)` for `Φ2`.
pub fn phi_density(order: usize, rank: usize, variant: PhiVariant) -> Result<Density> {
    if order < 2 || rank < 1 {
        return Err(CpError::InvalidArgument(format!("density needs N ≥ 2 and R ≥ 1, got N={order}, R={rank}")));
    }
    let (n, r2) = (order as u64, (rank * rank) as u64);
    let numerator = match variant {
        PhiVariant::Phi1 => (n - 1) * r2 + 1,
        PhiVariant::Phi2 => r2 + n - 1,
    };
    Ok(Density { numerator, denominator: n * r2 })
}

pub fn count_nonzeros<T: Scalar>(m: &Matrix<T>) -> usize {
    m.iter().filter(|&&x| x != T::zero()).count()
}
