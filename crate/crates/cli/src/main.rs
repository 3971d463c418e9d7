//! `locfrac`: batch front end for building local fractal functions, checking
//! their function-space conditions and estimating seminorms.

mod commands;
mod config;
mod csvio;
mod error;
mod query;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::SeminormInput;
use crate::config::SystemConfig;
use crate::error::CliError;
use crate::query::SpaceQuery;

#[derive(Parser)]
#[command(name = "locfrac", version, about = "Local fractal functions: solve, check, estimate, iterate")]
struct Cli {
    /// Worker threads for the parallel kernels (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// System description (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check the partition and system invariants.
    Validate(ConfigArg),
    /// Solve for the fixed point and write it as CSV.
    Solve {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the sufficient conditions for every queried space.
    Check {
        #[command(flatten)]
        config: ConfigArg,
        /// Extra space, e.g. `besov:p=2,q=2,s=0.5` or `sobolev:k=1,p=2`.
        #[arg(long)]
        space: Vec<SpaceQuery>,
    },
    /// Estimate difference seminorms of the fixed point or of a sampled function.
    Seminorm {
        #[arg(long, required_unless_present = "input")]
        config: Option<PathBuf>,
        /// Sampled function `x[,y],value` to estimate directly.
        #[arg(long, conflicts_with = "fixed_point")]
        input: Option<PathBuf>,
        /// Fixed point written by `solve`; reused when its hash stamp is fresh.
        #[arg(long)]
        fixed_point: Option<PathBuf>,
        #[arg(long)]
        space: Vec<SpaceQuery>,
        /// CSV of the integrand against |h| for every space.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Iterate the local IFS and write the final cloud and step distances.
    Attractor {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        steps: Option<usize>,
        /// Start from random points drawn with this seed instead of the lattice.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Semantic(format!("thread pool: {e}")))?;
    }
    let report = match cli.command {
        Command::Validate(c) => {
            let cfg = SystemConfig::load(&c.config)?;
            let (ok, text) = commands::validate(&cfg)?;
            let _ = write!(std::io::stdout().lock(), "{text}");
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Solve { config, out } => commands::solve(&SystemConfig::load(&config.config)?, &out)?,
        Command::Check { config, space } => commands::check(&SystemConfig::load(&config.config)?, &space)?,
        Command::Seminorm { config, input, fixed_point, space, profile } => {
            let cfg = config.as_deref().map(SystemConfig::load).transpose()?;
            commands::seminorm(SeminormInput {
                config: cfg.as_ref(),
                direct: input.as_deref(),
                cached: fixed_point.as_deref(),
                spaces: &space,
                profile: profile.as_deref(),
            })?
        }
        Command::Attractor { config, steps, seed, out } => {
            commands::attractor(&SystemConfig::load(&config.config)?, steps, seed, &out)?
        }
    };
    commands::print_report(&report)?;
    let failed = report.solver.as_ref().is_some_and(|s| !s.converged);
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
