//! Collinear benchmark tensors, calibrated noise, spectral feasibility and
//! angular-error scoring.
//!
//! Factors are `a_1^(n) = u_1^(n)` and `a_r^(n) = u_1^(n) + ν u_r^(n)` for
//! `r ≥ 2`, with `U^(n)` orthonormal. Small `ν` makes all components nearly
//! parallel in every mode.

use nalgebra::SymmetricEigen;

use crate::error::{CpError, Result};
use crate::kruskal::KruskalModel;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CollinearSpec {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub nu: f64,
    /// `None` for a noise-free benchmark.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Collinear<T: Scalar> {
    pub truth: KruskalModel<T>,
    pub tensor: DenseTensor<T>,
    /// Present when the spec carries an SNR.
    pub noisy: Option<DenseTensor<T>>,
}

pub fn gen_collinear<T: Scalar>(spec: &CollinearSpec) -> Result<Collinear<T>> {
    if !(spec.nu > 0.0 && spec.nu.is_finite()) {
        return Err(CpError::InvalidArgument(format!("nu must be positive, got {}", spec.nu)));
    }
    if spec.rank == 0 {
        return Err(CpError::InvalidArgument("rank must be at least 1".into()));
    }
    if spec.dims.is_empty() {
        return Err(CpError::InvalidDims("no dimensions given".into()));
    }
    let min_dim = *spec.dims.iter().min().expect("nonempty");
    if spec.rank > min_dim {
        return Err(CpError::RankTooLarge { rank: spec.rank, min_dim });
    }
    let mut rng = stream_rng(spec.seed, Stream::Factors);
    let r = spec.rank;
    let factors = spec
        .dims
        .iter()
        .map(|&d| {
            let g = Matrix::from_fn(d, r, |_, _| T::gaussian_parts(&mut rng));
            let u = g.qr().q();
            let mut a = u.clone();
            for c in 1..r {
                let col = u.column(0) + u.column(c) * T::from_real(spec.nu);
                a.set_column(c, &col);
            }
            a
        })
        .collect();
    let truth = KruskalModel::new(factors)?;
    let tensor = truth.reconstruct();
    let noisy = match spec.snr_db {
        Some(snr) => Some(add_noise(&tensor, snr, spec.seed)?),
        None => None,
    };
    Ok(Collinear { truth, tensor, noisy })
}

/// Mutual angles in degrees between generated components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    /// Between `a_1` and any `a_r`, `r ≥ 2`: `atan(ν)`.
    pub theta_1r: f64,
    /// Between `a_q` and `a_r`, `q, r ≥ 2`: `atan(ν sqrt(ν^2 + 2))`.
    pub theta_qr: f64,
}

pub fn collinearity_angles(nu: f64) -> Angles {
    Angles {
        theta_1r: nu.atan().to_degrees(),
        theta_qr: (nu * (nu * nu + 2.0).sqrt()).atan().to_degrees(),
    }
}

/// Angle in degrees between two vectors, ignoring sign or phase.
pub fn vector_angle_deg<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> f64 {
    unsigned_angle(a.as_slice(), b.as_slice()).to_degrees()
}

/// Pairwise angles (degrees) between the columns of each factor, `[n][(q, r)]`.
pub fn measured_angles<T: Scalar>(model: &KruskalModel<T>) -> Vec<Matrix<f64>> {
    model
        .factors()
        .iter()
        .map(|f| {
            let r = f.ncols();
            Matrix::from_fn(r, r, |q, s| {
                unsigned_angle(f.column(q).as_slice(), f.column(s).as_slice()).to_degrees()
            })
        })
        .collect()
}

/// Magnitude `(1 + ν^2)^(N/2)` of each component `r ≥ 2`; the first has magnitude 1.
pub fn collinear_magnitude(nu: f64, order: usize) -> f64 {
    (1.0 + nu * nu).powf(order as f64 / 2.0)
}

/// `σ^2 = ||Y||^2 / (10^(SNR/10) prod I_n)`.
pub fn noise_variance(norm2: f64, num_entries: usize, snr_db: f64) -> f64 {
    norm2 / (10f64.powf(snr_db / 10.0) * num_entries as f64)
}

/// `Y + σ N` with unit-variance Gaussian `N` (circular for complex data).
/// An infinite SNR returns the tensor unchanged.
pub fn add_noise<T: Scalar>(tensor: &DenseTensor<T>, snr_db: f64, seed: u64) -> Result<DenseTensor<T>> {
    let norm2 = tensor.norm_squared();
    if norm2 == 0.0 {
        return Err(CpError::ZeroNorm);
    }
    if snr_db == f64::INFINITY {
        return Ok(tensor.clone());
    }
    if snr_db.is_nan() {
        return Err(CpError::InvalidArgument("SNR is NaN".into()));
    }
    let sigma = noise_variance(norm2, tensor.len(), snr_db).sqrt();
    let mut rng = stream_rng(seed, Stream::Noise);
    let s = T::from_real(sigma);
    let data = tensor.data().iter().map(|&x| x + T::standard_normal(&mut rng) * s).collect();
    DenseTensor::new(tensor.dims().to_vec(), data)
}

/// `10 log10(||Y||^2 / ||Ỹ - Y||^2)`.
pub fn measured_snr_db<T: Scalar>(clean: &DenseTensor<T>, noisy: &DenseTensor<T>) -> Result<f64> {
    let noise = noisy.sub(clean)?.norm_squared();
    Ok(10.0 * (clean.norm_squared() / noise).log10())
}

/// Closed-form spectrum of `Y_(n) Y_(n)^T` for a cubic collinear tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumReport {
    pub x: f64,
    pub y: f64,
    /// Eigenvalue of multiplicity `R - 2`.
    pub lam_mid: f64,
    pub lam_max: f64,
    pub lam_min: f64,
    pub sigma2: f64,
    /// `σ^2 I^(N-1)`, the noise contribution to every eigenvalue.
    pub noise_floor: f64,
    /// `||Y||_F^2 = R^2 + (R-1)(xy - 1)`.
    pub norm2: f64,
    pub feasible: bool,
}

/// Eigenvalues of `Σ = Q (Q^T Q)^{∘(N-1)} Q^T` and the noise level at `snr_db`.
///
/// `snr_db = ∞` gives a zero noise floor.
pub fn spectrum(size: usize, rank: usize, order: usize, nu: f64, snr_db: f64) -> Result<SpectrumReport> {
    if rank < 2 {
        return Err(CpError::InvalidArgument(format!("spectrum needs R ≥ 2, got {rank}")));
    }
    if order < 2 || size < rank || nu.is_nan() || nu <= 0.0 {
        return Err(CpError::InvalidArgument(format!(
            "invalid spectrum inputs I={size}, R={rank}, N={order}, nu={nu}"
        )));
    }
    let r = rank as f64;
    let x = 1.0 + nu * nu;
    let y = x.powi(order as i32 - 1);
    let lam_mid = (x - 1.0) * (y - 1.0);
    let sum = x * y + (r - 2.0) * (r + x + y) + 3.0;
    let disc = (sum * sum - 4.0 * lam_mid).max(0.0);
    let lam_max = 0.5 * (sum + disc.sqrt());
    let lam_min = lam_mid / lam_max;
    let norm2 = r * r + (r - 1.0) * (x * y - 1.0);
    let cells = (size as f64).powi(order as i32);
    let sigma2 = if snr_db == f64::INFINITY { 0.0 } else { norm2 / (10f64.powf(snr_db / 10.0) * cells) };
    let noise_floor = sigma2 * (size as f64).powi(order as i32 - 1);
    Ok(SpectrumReport { x, y, lam_mid, lam_max, lam_min, sigma2, noise_floor, norm2, feasible: lam_min > noise_floor })
}

/// Explicit `Σ = Q (Q^T Q)^{∘(N-1)} Q^T` with `Q = [1 1^T; 0 ν I]`.
pub fn sigma_matrix(rank: usize, order: usize, nu: f64) -> Matrix<f64> {
    let q = Matrix::from_fn(rank, rank, |i, j| match (i, j) {
        (0, _) => 1.0,
        (i, j) if i == j => nu,
        _ => 0.0,
    });
    let g = (q.transpose() * &q).map(|v| v.powi(order as i32 - 1));
    &q * g * q.transpose()
}

/// Eigenvalues of a symmetric matrix in descending order.
pub fn descending_eigenvalues(m: &Matrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Angle in radians between `u` and `v` after removing the best sign or phase.
///
/// Computed as `2 asin(|u/|u| - e^{iφ} v/|v|| / 2)`, which stays accurate for tiny angles.
fn unsigned_angle<T: Scalar>(u: &[T], v: &[T]) -> f64 {
    let nu = u.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let inner: T = u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + b.conjugate() * a);
    let m = inner.modulus();
    let phase = if m > 0.0 { inner / T::from_real(m) } else { T::one() };
    let chord = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| (a / T::from_real(nu) - b * phase / T::from_real(nv)).modulus_squared())
        .sum::<f64>()
        .sqrt();
    2.0 * (0.5 * chord).min(1.0).asin()
}

/// Optimal assignment minimizing `sum_i cost[i][assign[i]]` for a square cost matrix.
pub fn hungarian(cost: &Matrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "hungarian needs a square matrix");
    // Potentials over 1-based rows/columns with a dummy column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// For each true component `r`, the estimated component matched to it.
///
/// Maximizes the summed congruence `prod_n |â_s^(n)^H a_r^(n)| / (||â_s^(n)|| ||a_r^(n)||)`.
pub fn match_components<T: Scalar>(truth: &KruskalModel<T>, estimate: &KruskalModel<T>) -> Result<Vec<usize>> {
    check_comparable(truth, estimate)?;
    let r = truth.rank();
    let cost = Matrix::from_fn(r, r, |i, j| {
        -(0..truth.order())
            .map(|n| {
                let a = truth.factor(n).column(i);
                let b = estimate.factor(n).column(j);
                let d = a.norm() * b.norm();
                if d > 0.0 { b.dotc(&a).modulus() / d } else { 0.0 }
            })
            .product::<f64>()
    });
    Ok(hungarian(&cost))
}

fn check_comparable<T: Scalar>(truth: &KruskalModel<T>, estimate: &KruskalModel<T>) -> Result<()> {
    if truth.rank() != estimate.rank() {
        return Err(CpError::ShapeMismatch(format!(
            "rank mismatch: truth {} vs estimate {}",
            truth.rank(),
            estimate.rank()
        )));
    }
    if truth.dims() != estimate.dims() {
        return Err(CpError::ShapeMismatch(format!(
            "dims mismatch: truth {:?} vs estimate {:?}",
            truth.dims(),
            estimate.dims()
        )));
    }
    Ok(())
}

/// Matched per-mode angles `α^(n)_r` in radians, indexed `[n][r]` by true component.
pub fn matched_angles<T: Scalar>(truth: &KruskalModel<T>, estimate: &KruskalModel<T>) -> Result<Vec<Vec<f64>>> {
    let assign = match_components(truth, estimate)?;
    Ok((0..truth.order())
        .map(|n| {
            (0..truth.rank())
                .map(|r| {
                    let a = truth.factor(n).column(r);
                    let b = estimate.factor(n).column(assign[r]);
                    unsigned_angle(a.as_slice(), b.as_slice())
                })
                .collect()
        })
        .collect())
}

/// Lowest reportable MedSAE; an exact match maps here instead of `-∞`.
pub const MEDSAE_FLOOR_DB: f64 = -300.0;

/// Median squared angular error in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct MedSae {
    /// Mean over modes for the first true component.
    pub first_db: f64,
    /// Mean over modes and over the remaining components.
    pub rest_db: f64,
    /// Mean over modes, per true component.
    pub per_component: Vec<f64>,
    /// `10 log10(median_runs α^2)` indexed `[n][r]`.
    pub per_mode: Vec<Vec<f64>>,
}

fn to_db(x: f64) -> f64 {
    if x > 0.0 { (10.0 * x.log10()).max(MEDSAE_FLOOR_DB) } else { MEDSAE_FLOOR_DB }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) }
}

/// MedSAE of one or more estimates (runs) against the same truth.
pub fn medsae<T: Scalar>(truth: &KruskalModel<T>, estimates: &[KruskalModel<T>]) -> Result<MedSae> {
    let pairs: Vec<_> = estimates.iter().map(|e| (truth, e)).collect();
    medsae_runs(&pairs)
}

/// MedSAE over runs that each carry their own truth; all runs must share rank and order.
pub fn medsae_runs<T: Scalar>(runs: &[(&KruskalModel<T>, &KruskalModel<T>)]) -> Result<MedSae> {
    let Some(&(first, _)) = runs.first() else {
        return Err(CpError::InvalidArgument("medsae needs at least one estimate".into()));
    };
    let (order, rank) = (first.order(), first.rank());
    let angles: Vec<Vec<Vec<f64>>> = runs
        .iter()
        .map(|&(t, e)| {
            if t.order() != order || t.rank() != rank {
                return Err(CpError::ShapeMismatch("runs differ in order or rank".into()));
            }
            matched_angles(t, e)
        })
        .collect::<Result<_>>()?;
    let per_mode: Vec<Vec<f64>> = (0..order)
        .map(|n| {
            (0..rank)
                .map(|r| to_db(median(angles.iter().map(|a| a[n][r] * a[n][r]).collect())))
                .collect()
        })
        .collect();
    let per_component: Vec<f64> =
        (0..rank).map(|r| per_mode.iter().map(|row| row[r]).sum::<f64>() / order as f64).collect();
    let first_db = per_component[0];
    let rest_db = if rank > 1 {
        per_component[1..].iter().sum::<f64>() / (rank - 1) as f64
    } else {
        f64::NAN
    };
    Ok(MedSae { first_db, rest_db, per_component, per_mode })
}

#[cfg(test)]
mod tests;
