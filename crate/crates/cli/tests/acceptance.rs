//! Runs every acceptance check at its stated tolerance and prints one
//! PASS/FAIL line per check. Exits nonzero if any check fails.

use std::process::ExitCode;

use mrf_phase_cli::checks::{run_checks, Context};

fn main() -> ExitCode {
    let ctx = Context::default();
    let results =
        run_checks(&ctx, None, |r| println!("{}", r.line())).expect("all check names are known");
    let failed = results.iter().filter(|r| !r.pass).count();
    println!(
        "{} of {} checks passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
