//! Command-line driver: argument parsing, the commands, and the acceptance
//! checks shared by `verify` and the `acceptance` test target.

pub mod args;
pub mod checks;
pub mod commands;

use std::io::Write;

use anyhow::Result;

pub use args::{Cli, Command};

/// Destination of command output.
pub type Out = dyn Write + Send;

/// Exit status for a run whose checks failed.
pub const EXIT_CHECK_FAILURE: i32 = 1;
/// Exit status for malformed input, including errors raised while computing.
pub const EXIT_USAGE: i32 = 2;

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli, out: &mut Out) -> Result<i32> {
    match cli.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()?
            .install(|| dispatch(&cli.command, out)),
        None => dispatch(&cli.command, out),
    }
}

fn dispatch(command: &Command, out: &mut Out) -> Result<i32> {
    match command {
        Command::Analyze(a) => commands::analyze(a, out)?,
        Command::Sweep(a) => commands::sweep(a, out)?,
        Command::Phase(a) => commands::phase(a, out)?,
        Command::Perturb(a) => commands::perturb(a, out)?,
        Command::Oracle(a) => commands::oracle(a, out)?,
        Command::Mcmc(a) => commands::mcmc(a, out)?,
        Command::Verify(a) => {
            if !commands::verify(a, out)? {
                return Ok(EXIT_CHECK_FAILURE);
            }
        }
    }
    Ok(0)
}
