use std::time::Instant;

use anyhow::{bail, Result};
use fastcp::fit::{fit, FitConfig, FitResult};
use fastcp::io::AnyTensor;
use fastcp::synth::medsae;
use fastcp::{DenseTensor, ScalarKind};

use crate::args::{FitArgs, SolverArgs};
use crate::files::{load_factors, load_tensor, save_factors, with_suffix, FileScalar, Meta};
use crate::record::{finite, write_csv, RunRecord};

pub fn config(solver: &SolverArgs, rank: usize, seed: u64) -> FitConfig {
    FitConfig {
        algorithm: solver.algo,
        rank,
        tau: solver.tau,
        tol: solver.tol,
        max_iters: solver.max_iters,
        seed,
        init: solver.init,
    }
}

pub fn run(args: &FitArgs) -> Result<RunRecord> {
    let meta = args.meta.as_deref().map(Meta::read).transpose()?;
    let seed = args.seed.or(meta.as_ref().map(|m| m.seed)).unwrap_or(0);
    let cfg = config(&args.solver, args.rank, seed);
    let record = match load_tensor(&args.input)? {
        AnyTensor::Real(y) => fit_one(&y, &cfg, meta.as_ref(), args)?,
        AnyTensor::Complex(y) => fit_one(&y, &cfg, meta.as_ref(), args)?,
    };
    write_csv(&with_suffix(&args.out, ".csv"), std::slice::from_ref(&record))?;
    println!(
        "{}: {} iterations ({} accepted), relerr {:.3e}, stop {}",
        record.algo, record.iters, record.accepted_iters, record.final_relerr, record.stop_reason
    );
    Ok(record)
}

fn fit_one<T: FileScalar>(y: &DenseTensor<T>, cfg: &FitConfig, meta: Option<&Meta>, args: &FitArgs) -> Result<RunRecord> {
    if let Some(m) = meta {
        let kind = y.scalar_kind();
        if m.kind != kind {
            let name = |k: ScalarKind| if k == ScalarKind::Real { "real" } else { "complex" };
            bail!("metadata describes a {} tensor, input is {}", name(m.kind), name(kind));
        }
    }
    let start = Instant::now();
    let FitResult { model, trace } = fit(y, cfg)?;
    let time_ms = start.elapsed().as_secs_f64() * 1e3;
    save_factors(&model, &args.out, "factor")?;
    let (first, rest) = match meta.filter(|m| !m.truth.is_empty()) {
        Some(m) => {
            let truth = load_factors::<T>(&m.truth)?;
            let score = medsae(&truth, std::slice::from_ref(&model))?;
            (Some(score.first_db), finite(score.rest_db))
        }
        None => (None, None),
    };
    Ok(RunRecord {
        seed: cfg.seed,
        nu: meta.map(|m| m.nu),
        rank: cfg.rank,
        snr_db: meta.and_then(|m| m.snr_db),
        algo: cfg.algorithm.name().into(),
        iters: trace.iterations(),
        accepted_iters: trace.accepted_iterations(),
        time_ms,
        final_relerr: trace.final_error(),
        medsae_first_db: first,
        medsae_rest_db: rest,
        stop_reason: trace.stop_reason.name().into(),
    })
}
