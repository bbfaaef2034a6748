use super::*;
use num_complex::Complex64;

fn spec(dims: &[usize], rank: usize, nu: f64, seed: u64) -> CollinearSpec {
    CollinearSpec { dims: dims.to_vec(), rank, nu, snr_db: None, seed }
}

#[test]
fn generator_angles_and_magnitudes() {
    let nu = 0.3;
    let g = gen_collinear::<f64>(&spec(&[8, 7, 9], 4, nu, 5)).unwrap();
    let want = collinearity_angles(nu);
    for a in measured_angles(&g.truth) {
        for q in 1..4 {
            assert!((a[(0, q)] - want.theta_1r).abs() < 1e-10);
            for r in 1..4 {
                if q != r {
                    assert!((a[(q, r)] - want.theta_qr).abs() < 1e-10);
                }
            }
        }
    }
    let mags = g.truth.component_magnitudes();
    assert!((mags[0] - 1.0).abs() < 1e-12);
    for m in &mags[1..] {
        assert!((m - collinear_magnitude(nu, 3)).abs() < 1e-12);
    }
}

#[test]
fn angle_examples() {
    let a = collinearity_angles(0.1);
    assert!((a.theta_1r - 5.7106).abs() < 1e-4);
    assert!((a.theta_qr - 8.0693).abs() < 1e-4);
}

#[test]
fn generator_is_deterministic_and_checks_rank() {
    let a = gen_collinear::<Complex64>(&spec(&[5, 5, 5], 3, 0.2, 1)).unwrap();
    let b = gen_collinear::<Complex64>(&spec(&[5, 5, 5], 3, 0.2, 1)).unwrap();
    assert_eq!(a.tensor, b.tensor);
    assert!(matches!(
        gen_collinear::<f64>(&spec(&[5, 2, 5], 3, 0.2, 1)),
        Err(CpError::RankTooLarge { rank: 3, min_dim: 2 })
    ));
    assert!(gen_collinear::<f64>(&spec(&[5, 5], 2, 0.0, 1)).is_err());
}

#[test]
fn noise_hits_requested_snr() {
    let g = gen_collinear::<f64>(&CollinearSpec { snr_db: Some(20.0), ..spec(&[30, 30, 30], 3, 0.5, 2) }).unwrap();
    let snr = measured_snr_db(&g.tensor, g.noisy.as_ref().unwrap()).unwrap();
    assert!((snr - 20.0).abs() < 0.2, "{snr}");
    assert_eq!(add_noise(&g.tensor, f64::INFINITY, 3).unwrap(), g.tensor);
}

#[test]
fn closed_form_spectrum_matches_sigma_matrix() {
    for (r, n, nu) in [(2, 3, 0.4), (5, 3, 0.1), (4, 4, 0.7), (6, 2, 0.25)] {
        let s = spectrum(50, r, n, nu, f64::INFINITY).unwrap();
        let ev = descending_eigenvalues(&sigma_matrix(r, n, nu));
        assert!((ev[0] - s.lam_max).abs() < 1e-9 * s.lam_max);
        assert!((ev[r - 1] - s.lam_min).abs() < 1e-9 * s.lam_max);
        for v in &ev[1..r - 1] {
            assert!((v - s.lam_mid).abs() < 1e-9 * s.lam_max);
        }
        assert!((sigma_matrix(r, n, nu).trace() - s.norm2).abs() < 1e-9 * s.norm2);
    }
}

#[test]
fn spectrum_norm_matches_generated_tensor() {
    let g = gen_collinear::<f64>(&spec(&[6, 6, 6], 4, 0.3, 7)).unwrap();
    let s = spectrum(6, 4, 3, 0.3, f64::INFINITY).unwrap();
    assert!((g.tensor.norm_squared() - s.norm2).abs() < 1e-10 * s.norm2);
}

#[test]
fn unfolding_gram_spectrum_matches_closed_form() {
    let g = gen_collinear::<f64>(&spec(&[7, 7, 7], 3, 0.4, 3)).unwrap();
    let y = g.tensor.unfold(0).unwrap();
    let ev = descending_eigenvalues(&(&y * y.transpose()));
    let s = spectrum(7, 3, 3, 0.4, f64::INFINITY).unwrap();
    assert!((ev[0] - s.lam_max).abs() < 1e-9 * s.lam_max);
    assert!((ev[1] - s.lam_mid).abs() < 1e-9 * s.lam_max);
    assert!((ev[2] - s.lam_min).abs() < 1e-9 * s.lam_max);
}

#[test]
fn feasibility_example() {
    assert!(!spectrum(100, 15, 3, 0.1, 20.0).unwrap().feasible);
    assert!(spectrum(100, 3, 3, 0.5, 40.0).unwrap().feasible);
    assert!(spectrum(100, 1, 3, 0.5, 40.0).is_err());
}

#[test]
fn hungarian_small_cases() {
    let c = Matrix::from_row_slice(3, 3, &[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
    assert_eq!(hungarian(&c), vec![1, 0, 2]);
    assert_eq!(hungarian(&Matrix::<f64>::zeros(1, 1)), vec![0]);
}

#[test]
fn medsae_of_permuted_scaled_copy_is_floor() {
    let g = gen_collinear::<Complex64>(&spec(&[5, 6, 4], 3, 0.5, 4)).unwrap();
    let perm = [2usize, 0, 1];
    let phase = Complex64::from_polar(2.0, 0.7);
    let factors = g
        .truth
        .factors()
        .iter()
        .map(|f| Matrix::from_fn(f.nrows(), 3, |i, j| f[(i, perm[j])] * phase))
        .collect();
    let est = KruskalModel::new(factors).unwrap();
    assert_eq!(match_components(&g.truth, &est).unwrap(), vec![1, 2, 0]);
    let m = medsae(&g.truth, &[est]).unwrap();
    assert!(m.first_db < -250.0 && m.rest_db < -250.0);
}

#[test]
fn medsae_db_anchors() {
    // Rotating one column by α in every mode gives 10 log10(α^2).
    for deg in [1.81f64, 5.73] {
        let a = deg.to_radians();
        let e0 = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let rot = Matrix::from_column_slice(2, 1, &[a.cos(), a.sin()]);
        let truth = KruskalModel::new(vec![e0.clone(), e0.clone(), e0]).unwrap();
        let est = KruskalModel::new(vec![rot.clone(), rot.clone(), rot]).unwrap();
        let m = medsae(&truth, &[est]).unwrap();
        assert!((m.first_db - 10.0 * (a * a).log10()).abs() < 1e-9);
    }
}

#[test]
fn medsae_median_over_runs() {
    let e0 = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
    let truth = KruskalModel::new(vec![e0.clone(), e0.clone()]).unwrap();
    let runs: Vec<_> = [0.01f64, 0.02, 0.5]
        .iter()
        .map(|&a| {
            let v = Matrix::from_column_slice(2, 1, &[a.cos(), a.sin()]);
            KruskalModel::new(vec![v.clone(), v]).unwrap()
        })
        .collect();
    let m = medsae(&truth, &runs).unwrap();
    assert!((m.first_db - 10.0 * (0.02f64 * 0.02).log10()).abs() < 1e-9);
    assert!(m.rest_db.is_nan());
}

#[test]
fn printed_norm_form_agrees_only_for_two_components() {
    for r in 1..6usize {
        let s = spectrum(6, r.max(2), 3, 0.4, f64::INFINITY).unwrap();
        let (xy, rr) = (s.x * s.y, r.max(2) as f64);
        let printed = rr * rr + (rr - 1.0) * xy - 1.0;
        assert_eq!((printed - s.norm2).abs() < 1e-12, r <= 2);
    }
    let one = gen_collinear::<f64>(&spec(&[4, 4, 4], 1, 0.4, 1)).unwrap();
    assert!((one.tensor.norm_squared() - 1.0).abs() < 1e-12);
}
