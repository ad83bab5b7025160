//! Command-line front end for the Selberg central-limit laboratory.
//!
//! One command per process. Exit codes: 0 when every verdict passes,
//! 1 when the experiment ran but a verdict failed, 2 for usage or
//! configuration errors, 3 for resource or precision failures.

mod commands;
mod config;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use selberg_lab::Error;

use config::{parse_override_flags, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "selberg-lab",
    version = report::VERSION,
    about = "Numerical laboratory for the value distribution of automorphic L-functions"
)]
struct Cli {
    /// JSON run configuration (required by moments, clt, independence, consistency).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for report and sample files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Cap on worker threads. Results are byte-identical for any value.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Replaces the seed of the configured sample plan.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Schedule override KEY=VALUE with KEY one of w, x, y, sigma0, k1, k2;
    /// repeatable; wins over the config file.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write (or verify) the coefficient cache file for a built-in form.
    Coeffs {
        form_id: String,
        limit: u64,
        out_path: Option<PathBuf>,
    },
    /// Evaluate L(f, sigma + it) and print value records as JSON.
    Eval { form_id: String, sigma: f64, t: f64 },
    /// Mixed moments of the prime series: exact expansion vs quadrature.
    Moments,
    /// Sample log|L| on [T, 2T] and test the central-limit shape.
    Clt,
    /// Joint log|L| sampling across forms; covariance verdicts.
    Independence,
    /// Mollifier-chain checks: exp(-P) residual, factor consistency,
    /// mollified mean square, optional window integral.
    Consistency,
}

/// Driver-level error: either a list of configuration violations or an
/// error from the underlying library.
#[derive(Debug)]
pub enum CliError {
    Config(Vec<String>),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn core_exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Domain(_) | Error::InfeasibleSchedule(_) => 2,
        Error::ResourceLimit(_)
        | Error::Precision(_)
        | Error::TableTooShort { .. }
        | Error::Io(_)
        | Error::CacheFormat(_) => 3,
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Err(CliError::Config(vec![
            "--config PATH is required for this command".to_string(),
        ]));
    };
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Config(vec![format!("config `{}`: {e}", path.display())])
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(vec![format!("config `{}`: {e}", path.display())]))
}

fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    let flag_overrides = parse_override_flags(&cli.overrides).map_err(CliError::Config)?;
    match &cli.command {
        Command::Coeffs {
            form_id,
            limit,
            out_path,
        } => commands::cmd_coeffs(form_id, *limit, out_path.clone()),
        Command::Eval { form_id, sigma, t } => commands::cmd_eval(form_id, *sigma, *t),
        Command::Moments => {
            let config = load_config(&cli.config)?;
            commands::cmd_moments(&config, flag_overrides, &cli.out)
        }
        Command::Clt => {
            let config = load_config(&cli.config)?;
            commands::cmd_clt(&config, flag_overrides, cli.seed, &cli.out)
        }
        Command::Independence => {
            let config = load_config(&cli.config)?;
            commands::cmd_independence(&config, flag_overrides, cli.seed, &cli.out)
        }
        Command::Consistency => {
            let config = load_config(&cli.config)?;
            commands::cmd_consistency(&config, flag_overrides, cli.seed, &cli.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        // Cap internal parallelism; every reduction is order-stable, so the
        // cap never changes results.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more verdicts failed (see report)");
            ExitCode::from(1)
        }
        Err(CliError::Config(violations)) => {
            eprintln!("configuration error:");
            for v in &violations {
                eprintln!("  - {v}");
            }
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(core_exit_code(&e))
        }
    }
}
