use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slabmhd::harness::{self, report, run, sweep, validate, Check, ExperimentConfig};

#[derive(Parser)]
#[command(name = "slabmhd", version, about = "Thin-slab ideal MHD solver and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set stepper.t_end=1.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Exit with a nonzero status if any check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the slab equations and write diagnostics.
    Run3d(Common),
    /// Evolve the planar limit equations.
    Run2d(Common),
    /// Paired slab and planar runs over a list of thicknesses.
    SweepDelta(Common),
    /// Kernel bounds and the Green's function against the spectral pressure.
    ValidatePressure(Common),
    /// Re-render plots and print the checks stored in a run directory.
    Report {
        dir: PathBuf,
        #[arg(long)]
        check: bool,
    },
    /// Print the effective configuration as TOML.
    Config(Common),
}

fn execute(cmd: Command) -> slabmhd::Result<(Vec<Check>, bool)> {
    let load = |c: &Common| ExperimentConfig::load(c.config.as_deref(), &c.overrides);
    Ok(match cmd {
        Command::Run3d(c) => (run::cmd_run3d(&load(&c)?)?.checks, c.check),
        Command::Run2d(c) => (run::cmd_run2d(&load(&c)?)?.checks, c.check),
        Command::SweepDelta(c) => (sweep::cmd_sweep_delta(&load(&c)?)?.checks, c.check),
        Command::ValidatePressure(c) => (validate::cmd_validate_pressure(&load(&c)?)?.checks, c.check),
        Command::Report { dir, check } => {
            let out = report::cmd_report(&dir)?;
            print!("{}", out.text);
            return Ok((vec![], check && !harness::all_pass(&out.checks)));
        }
        Command::Config(c) => {
            print!("{}", load(&c)?.to_toml());
            (vec![], false)
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok((checks, strict)) => {
            for c in &checks {
                println!("{}", c.line());
            }
            let failed = if checks.is_empty() { strict } else { strict && !harness::all_pass(&checks) };
            if failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
