//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on validation failure (bad config, CFL
//! violation, comparison above threshold), 2 on runtime failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::load_scenario;
use crate::error::{Error, Result};
use crate::integrate::{cfl_dt, run};
use crate::montecarlo::run_mc_with;
use crate::output::{compare_dirs, write_outputs, Source};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hybridfp", version, about = "Finite-volume hybrid Fokker-Planck solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the density and write the mass series and snapshots.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Monte Carlo reference and write the same outputs.
    Mc {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare PDE and MC output directories.
    Compare {
        pde: PathBuf,
        mc: PathBuf,
        /// Largest acceptable mode-mass deviation.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Validate a config file without running it.
    Check { config: PathBuf },
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Run { config, out } => {
            let scenario = load_scenario(&config)?;
            let record = run(&scenario)?;
            let files = write_outputs(&scenario, &record.series, &record.snapshots, &out, Source::Pde)?;
            let drift = record
                .series
                .totals
                .iter()
                .map(|m| (m - 1.0).abs())
                .fold(0.0, f64::max);
            println!(
                "wrote {} files to {}; max |total mass - 1| = {drift:.3e}",
                files.len(),
                out.display()
            );
            Ok(EXIT_OK)
        }
        Command::Mc { config, out, seed } => {
            let scenario = load_scenario(&config)?;
            let mc = scenario.mc();
            let record = run_mc_with(&scenario, mc.n_particles, seed.unwrap_or(mc.seed))?;
            let files = write_outputs(&scenario, &record.series, &record.snapshots, &out, Source::Mc)?;
            println!("wrote {} files to {}", files.len(), out.display());
            Ok(EXIT_OK)
        }
        Command::Compare { pde, mc, threshold } => {
            let report = compare_dirs(&pde, &mc)?;
            for (id, d) in report.mode_ids.iter().zip(&report.max_mass_deviation) {
                println!("max |mass_mode{id} (pde) - mass_mode{id} (mc)| = {d:.6e}");
            }
            for (name, d) in &report.snapshot_l1 {
                println!("L1 {name} = {d:.6e}");
            }
            let worst = report.max_deviation();
            if worst <= threshold {
                println!("PASS: max mode-mass deviation {worst:.6e} <= {threshold}");
                Ok(EXIT_OK)
            } else {
                println!("FAIL: max mode-mass deviation {worst:.6e} > {threshold}");
                Ok(EXIT_VALIDATION)
            }
        }
        Command::Check { config } => {
            let scenario = load_scenario(&config)?;
            println!(
                "ok: {} modes, dt = {:.6e}, CFL bound = {:.6e}",
                scenario.modes().len(),
                scenario.dt(),
                cfl_dt(&scenario)
            );
            Ok(EXIT_OK)
        }
    }
}

/// Parse `argv` (including the program name) and run; returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            // Help and version go to stdout, usage errors to stderr.
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_with_validation_code() {
        assert_eq!(cli_main(["hybridfp"]), EXIT_VALIDATION);
        assert_eq!(cli_main(["hybridfp", "frobnicate"]), EXIT_VALIDATION);
        assert_eq!(cli_main(["hybridfp", "run", "x.cfg"]), EXIT_VALIDATION);
    }

    #[test]
    fn missing_file_is_runtime_failure() {
        assert_eq!(cli_main(["hybridfp", "check", "/nonexistent/x.cfg"]), EXIT_RUNTIME);
    }
}
