//! Command-line front end for `ssim-forensics`: PNG input and output,
//! command dispatch, deterministic JSON reports and the reproduction of
//! reference values.

pub mod args;
pub mod commands;
pub mod io;
pub mod json;
pub mod repro;

use anyhow::Result;

use args::{Cli, Command};

/// Outcome of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The command completed but some reference checks missed tolerance.
    ChecksFailed,
}

pub fn run(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Compare(a) => commands::compare_cmd(a)?,
        Command::Generate(a) => commands::generate_cmd(a)?,
        Command::Sweep(a) => commands::sweep_cmd(a)?,
        Command::Minima(a) => commands::minima_cmd(a)?,
        Command::Scan(a) => commands::scan_cmd(a)?,
        Command::MseCheck(a) => commands::mse_check_cmd(a)?,
        Command::Repro(a) => {
            let checks = repro::repro_all(&a.out)?;
            print!("{}", repro::format_checks(&checks));
            if checks.failures() > 0 {
                return Ok(Status::ChecksFailed);
            }
        }
    }
    Ok(Status::Ok)
}
