use std::process::ExitCode;

use anyhow::Result;
use fastcp::verify::{run_suite, VerifyConfig};

use crate::args::VerifyArgs;

pub fn run(args: &VerifyArgs) -> Result<ExitCode> {
    let cfg = VerifyConfig { seeds: args.seeds, base_seed: args.base_seed, perturb: args.perturb };
    let checks = run_suite(&cfg)?;
    println!("{:<30} {:>6} {:>12} {:>10}  result", "identity", "cases", "max error", "tolerance");
    for c in &checks {
        let verdict = if c.passed() { "pass" } else { "FAIL" };
        println!("{:<30} {:>6} {:>12.3e} {:>10.1e}  {verdict}", c.name, c.cases, c.max_error, c.tolerance);
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed == 0 {
        println!("all {} identities hold", checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failed} of {} identities failed", checks.len());
        Ok(ExitCode::from(1))
    }
}
