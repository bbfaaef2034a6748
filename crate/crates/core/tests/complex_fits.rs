use fastcp::complex::{fit_complex, ComplexKruskalModel};
use fastcp::fit::{fit, fit_from, Algorithm, FitConfig};
use fastcp::synth::{gen_collinear, medsae, CollinearSpec};
use num_complex::Complex64;

fn spec(size: usize, nu: f64, snr_db: Option<f64>, seed: u64) -> CollinearSpec {
    CollinearSpec { dims: vec![size; 3], rank: 3, nu, snr_db, seed }
}

#[test]
fn noise_free_collinear_complex_converges() {
    let mut hits = 0;
    for seed in 0..20 {
        let g = gen_collinear::<Complex64>(&spec(12, 0.5, None, seed)).unwrap();
        let cfg = FitConfig { tol: 1e-10, seed, ..FitConfig::new(Algorithm::FlmA, 3) };
        let res = fit_complex(&g.tensor, &cfg).unwrap();
        if res.trace.iterations_to(1e-8).is_some() {
            hits += 1;
        }
    }
    assert!(hits >= 18, "{hits}/20");
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) }
}

fn mean_db(truth: &ComplexKruskalModel, est: ComplexKruskalModel) -> f64 {
    let m = medsae(truth, &[est]).unwrap();
    m.per_component.iter().sum::<f64>() / m.per_component.len() as f64
}

#[test]
fn flm_beats_als_ls_on_high_magnitude_components() {
    let (mut flm, mut als) = (Vec::new(), Vec::new());
    for seed in 0..8 {
        let g = gen_collinear::<Complex64>(&spec(10, 4.0, Some(30.0), seed)).unwrap();
        let y = g.noisy.as_ref().unwrap();
        let cfg = FitConfig { max_iters: 300, seed, ..FitConfig::new(Algorithm::FlmA, 3) };
        flm.push(mean_db(&g.truth, fit(y, &cfg).unwrap().model));
        als.push(mean_db(&g.truth, fit(y, &FitConfig { algorithm: Algorithm::AlsLs, ..cfg }).unwrap().model));
    }
    let (sf, sa) = (median(flm), median(als));
    assert!(sf < sa, "flm {sf:.2} dB vs als-ls {sa:.2} dB");
}

#[test]
fn conjugated_tensor_gives_conjugated_solution() {
    let g = gen_collinear::<Complex64>(&spec(6, 0.5, Some(25.0), 3)).unwrap();
    let y = g.noisy.unwrap();
    let cfg = FitConfig { max_iters: 40, ..FitConfig::new(Algorithm::FlmA, 3) };
    let a = fit(&y, &cfg).unwrap();
    let init = fastcp::fit::initial_model(&y, &cfg).unwrap();
    let b = fit_from(&y.conj(), init.conj(), &cfg).unwrap();
    for (ea, eb) in a.trace.entries.iter().zip(&b.trace.entries) {
        assert!((ea.rel_error - eb.rel_error).abs() < 1e-9);
    }
    let diff = a.model.conj().reconstruct().sub(&b.model.reconstruct()).unwrap().frobenius_norm();
    assert!(diff < 1e-6 * y.frobenius_norm());
}
