use anyhow::Result;
use fastcp::synth::{collinearity_angles, spectrum, SpectrumReport};
use serde::Serialize;

use crate::args::SpectrumArgs;
use crate::record::{finite, write_csv};

#[derive(Debug, Serialize)]
struct Row {
    nu: f64,
    snr_db: Option<f64>,
    theta_1r_deg: f64,
    theta_qr_deg: f64,
    lam_max: f64,
    lam_mid: f64,
    lam_min: f64,
    noise_floor: f64,
    feasible: bool,
}

pub fn run(args: &SpectrumArgs) -> Result<Vec<SpectrumReport>> {
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &nu in &args.nu {
        let angles = collinearity_angles(nu);
        for &snr in &args.snr {
            let s = spectrum(args.size, args.rank, args.order, nu, snr)?;
            println!(
                "nu={nu} snr={snr} dB: lam_max={:.6e} lam_mid={:.6e} lam_min={:.6e} noise_floor={:.6e} -> {}",
                s.lam_max,
                s.lam_mid,
                s.lam_min,
                s.noise_floor,
                if s.feasible { "feasible" } else { "infeasible" }
            );
            rows.push(Row {
                nu,
                snr_db: finite(snr),
                theta_1r_deg: angles.theta_1r,
                theta_qr_deg: angles.theta_qr,
                lam_max: s.lam_max,
                lam_mid: s.lam_mid,
                lam_min: s.lam_min,
                noise_floor: s.noise_floor,
                feasible: s.feasible,
            });
            reports.push(s);
        }
    }
    if let Some(path) = &args.csv {
        write_csv(path, &rows)?;
    }
    Ok(reports)
}
