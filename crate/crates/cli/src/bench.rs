//! Monte-Carlo sweep over `(nu, R, snr, seed)` and a set of algorithms.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use fastcp::fit::{fit, Algorithm, FitConfig, StopReason};
use fastcp::synth::{gen_collinear, medsae_runs, CollinearSpec, Collinear};
use fastcp::{KruskalModel, Scalar};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::args::BenchArgs;
use crate::record::{finite, median, write_csv, RunRecord, SummaryRecord};

struct Instance<T: Scalar> {
    nu: f64,
    rank: usize,
    snr: f64,
    seed: u64,
    data: Collinear<T>,
}

struct Outcome<T: Scalar> {
    record: RunRecord,
    model: Option<KruskalModel<T>>,
}

pub fn summary_path(args: &BenchArgs) -> PathBuf {
    args.summary.clone().unwrap_or_else(|| args.out.with_extension("summary.csv"))
}

pub fn run(args: &BenchArgs) -> Result<(Vec<RunRecord>, Vec<SummaryRecord>)> {
    if args.algos.is_empty() || args.seeds == 0 {
        bail!("bench needs at least one algorithm and one seed");
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build()?;
    let (runs, summary) = pool.install(|| {
        if args.complex {
            sweep::<Complex64>(args)
        } else {
            sweep::<f64>(args)
        }
    })?;
    write_csv(&args.out, &runs)?;
    write_csv(&summary_path(args), &summary)?;
    for s in &summary {
        println!(
            "nu={} R={} snr={} {:<10} converged {}/{} median iters {} medsae {:.1}/{:.1} dB",
            s.nu,
            s.rank,
            s.snr_db.map_or("inf".into(), |x| x.to_string()),
            s.algo,
            s.converged,
            s.runs,
            s.median_iters,
            s.medsae_first_db.unwrap_or(f64::NAN),
            s.medsae_rest_db.unwrap_or(f64::NAN),
        );
    }
    Ok((runs, summary))
}

fn sweep<T: Scalar>(args: &BenchArgs) -> Result<(Vec<RunRecord>, Vec<SummaryRecord>)> {
    let mut cells = Vec::new();
    for &nu in &args.nu {
        for &rank in &args.rank {
            for &snr in &args.snr {
                cells.push((nu, rank, snr));
            }
        }
    }
    let specs: Vec<_> = cells
        .iter()
        .flat_map(|&(nu, rank, snr)| (0..args.seeds).map(move |i| (nu, rank, snr, args.base_seed + i)))
        .collect();
    let instances = specs
        .into_par_iter()
        .map(|(nu, rank, snr, seed)| {
            let spec = CollinearSpec {
                dims: vec![args.size; args.order],
                rank,
                nu,
                snr_db: finite(snr),
                seed,
            };
            Ok(Instance { nu, rank, snr, seed, data: gen_collinear::<T>(&spec)? })
        })
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(&Instance<T>, Algorithm)> =
        instances.iter().flat_map(|inst| args.algos.iter().map(move |&a| (inst, a))).collect();
    let outcomes: Vec<Outcome<T>> = tasks.into_par_iter().map(|(inst, algo)| run_one(args, inst, algo)).collect();

    let mut summary = Vec::new();
    for &(nu, rank, snr) in &cells {
        for &algo in &args.algos {
            let group: Vec<(&Instance<T>, &Outcome<T>)> = instances
                .iter()
                .flat_map(|i| std::iter::repeat_n(i, args.algos.len()))
                .zip(&outcomes)
                .filter(|(i, o)| i.nu == nu && i.rank == rank && i.snr == snr && o.record.algo == algo.name())
                .collect();
            summary.push(summarize(nu, rank, snr, algo, &group)?);
        }
    }
    Ok((outcomes.into_iter().map(|o| o.record).collect(), summary))
}

fn run_one<T: Scalar>(args: &BenchArgs, inst: &Instance<T>, algo: Algorithm) -> Outcome<T> {
    let cfg = FitConfig {
        algorithm: algo,
        rank: inst.rank,
        tau: args.tau,
        tol: args.tol,
        max_iters: args.max_iters,
        seed: inst.seed,
        init: args.init,
    };
    let y = inst.data.noisy.as_ref().unwrap_or(&inst.data.tensor);
    let start = Instant::now();
    let result = fit(y, &cfg);
    let time_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut record = RunRecord {
        seed: inst.seed,
        nu: Some(inst.nu),
        rank: inst.rank,
        snr_db: finite(inst.snr),
        algo: algo.name().into(),
        iters: 0,
        accepted_iters: 0,
        time_ms,
        final_relerr: f64::NAN,
        medsae_first_db: None,
        medsae_rest_db: None,
        stop_reason: StopReason::Error.name().into(),
    };
    let Ok(res) = result else {
        return Outcome { record, model: None };
    };
    record.iters = res.trace.iterations();
    record.accepted_iters = res.trace.accepted_iterations();
    record.final_relerr = res.trace.final_error();
    record.stop_reason = res.trace.stop_reason.name().into();
    if let Ok(score) = medsae_runs(&[(&inst.data.truth, &res.model)]) {
        record.medsae_first_db = Some(score.first_db);
        record.medsae_rest_db = finite(score.rest_db);
    }
    Outcome { record, model: Some(res.model) }
}

fn summarize<T: Scalar>(
    nu: f64,
    rank: usize,
    snr: f64,
    algo: Algorithm,
    group: &[(&Instance<T>, &Outcome<T>)],
) -> Result<SummaryRecord> {
    let ok: Vec<_> = group.iter().filter_map(|(i, o)| o.model.as_ref().map(|m| (&i.data.truth, m))).collect();
    let records: Vec<&RunRecord> = group.iter().map(|(_, o)| &o.record).collect();
    let fitted: Vec<&&RunRecord> = records.iter().filter(|r| r.stop_reason != StopReason::Error.name()).collect();
    let (first, rest) = if ok.is_empty() {
        (None, None)
    } else {
        let score = medsae_runs(&ok)?;
        (Some(score.first_db), finite(score.rest_db))
    };
    Ok(SummaryRecord {
        nu,
        rank,
        snr_db: finite(snr),
        algo: algo.name().into(),
        runs: records.len(),
        converged: records.iter().filter(|r| r.stop_reason == StopReason::Tol.name()).count(),
        errors: records.len() - fitted.len(),
        median_iters: median(fitted.iter().map(|r| r.iters as f64).collect()),
        median_time_ms: median(fitted.iter().map(|r| r.time_ms).collect()),
        median_final_relerr: median(fitted.iter().map(|r| r.final_relerr).collect()),
        medsae_first_db: first,
        medsae_rest_db: rest,
    })
}
