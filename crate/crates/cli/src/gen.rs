use anyhow::Result;
use fastcp::synth::{gen_collinear, measured_snr_db, CollinearSpec};
use fastcp::{Scalar, ScalarKind};
use num_complex::Complex64;

use crate::args::GenArgs;
use crate::files::{save_factors, save_tensor, with_suffix, Meta};

pub fn run(args: &GenArgs) -> Result<Meta> {
    if args.complex {
        generate::<Complex64>(args)
    } else {
        generate::<f64>(args)
    }
}

fn generate<T: Scalar>(args: &GenArgs) -> Result<Meta> {
    let spec = CollinearSpec {
        dims: args.dims.clone(),
        rank: args.rank,
        nu: args.nu,
        snr_db: args.snr.filter(|s| s.is_finite()),
        seed: args.seed,
    };
    let data = gen_collinear::<T>(&spec)?;
    let tensor = with_suffix(&args.out, ".cptn");
    save_tensor(&tensor, &data.tensor)?;
    let truth = save_factors(&data.truth, &args.out, "truth")?;
    let (noisy, measured) = match &data.noisy {
        Some(n) => {
            let path = with_suffix(&args.out, ".noisy.cptn");
            save_tensor(&path, n)?;
            let snr = measured_snr_db(&data.tensor, n)?;
            println!("measured SNR {snr:.3} dB (target {} dB)", spec.snr_db.unwrap_or(f64::INFINITY));
            (Some(path), Some(snr))
        }
        None => (None, None),
    };
    let meta = Meta {
        dims: args.dims.clone(),
        rank: args.rank,
        nu: args.nu,
        snr_db: spec.snr_db,
        seed: args.seed,
        kind: if args.complex { ScalarKind::Complex } else { ScalarKind::Real },
        tensor,
        noisy,
        measured_snr_db: measured,
        truth,
    };
    meta.write(&with_suffix(&args.out, ".meta"))?;
    Ok(meta)
}
