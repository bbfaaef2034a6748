//! CSV rows for single fits and sweeps.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// One fit. Column order is the CSV layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub nu: Option<f64>,
    #[serde(rename = "R")]
    pub rank: usize,
    pub snr_db: Option<f64>,
    pub algo: String,
    pub iters: usize,
    pub accepted_iters: usize,
    pub time_ms: f64,
    pub final_relerr: f64,
    pub medsae_first_db: Option<f64>,
    pub medsae_rest_db: Option<f64>,
    pub stop_reason: String,
}

/// Medians over the seeds of one `(nu, R, snr, algo)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub nu: f64,
    #[serde(rename = "R")]
    pub rank: usize,
    pub snr_db: Option<f64>,
    pub algo: String,
    pub runs: usize,
    pub converged: usize,
    pub errors: usize,
    pub median_iters: f64,
    pub median_time_ms: f64,
    pub median_final_relerr: f64,
    pub medsae_first_db: Option<f64>,
    pub medsae_rest_db: Option<f64>,
}

pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_rows(file, rows)
}

pub fn write_rows<S: Serialize, W: Write>(w: W, rows: &[S]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// `+inf` (noise-free) is stored as an empty cell.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) }
}
