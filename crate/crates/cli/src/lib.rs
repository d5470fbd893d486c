//! Command-line workflows over `multicurve-core`: bond curves, FRA
//! decompositions, caplet prices, path simulation and calibration.
//!
//! Every command reads one JSON [`RunConfig`], applies flag overrides and
//! writes its artifacts under the output directory. Outputs depend only on
//! the config, the flags and the seed.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_bond, cmd_calibrate, cmd_caplet, cmd_fra, cmd_simulate};
pub use config::{Format, RunConfig};

/// Failure classes, each with its own exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<multicurve_core::Error> for CliError {
    fn from(e: multicurve_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "multicurve",
    version,
    about = "Two-curve affine short-rate pricer"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the simulation and quote-noise seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Add a Monte Carlo cross-check where the command supports one.
    #[arg(long, global = true)]
    pub mc: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for Monte Carlo and calibration.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Risk-free and risky discount curves.
    Bond {
        /// Maturities, replacing the configured list.
        #[arg(long, value_delimiter = ',')]
        maturities: Option<Vec<f64>>,
    },
    /// FRA fair rates and their decomposition.
    Fra,
    /// Fourier caplet prices.
    Caplet {
        /// Fixed damping R; disables the automatic search.
        #[arg(long, allow_negative_numbers = true)]
        damping: Option<f64>,
    },
    /// Factor paths and Monte Carlo estimates.
    Simulate,
    /// Two-stage calibration to generated or supplied quotes.
    Calibrate {
        /// Quote file (CSV, or JSON by extension).
        #[arg(long)]
        quotes: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config,
}

/// Runs one command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let g = &cli.global;
    let mut config = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        config.simulation.seed = seed;
        config.calibration.quote_seed = seed;
    }
    if let Some(dir) = &g.out {
        config.output.dir = dir.clone();
    }
    if let Some(format) = g.format {
        config.output.format = format;
    }
    if let Command::Caplet { damping: Some(r) } = cli.command {
        config.quadrature.damping = r;
        config.quadrature.adapt_damping = false;
    }
    config.validate()?;

    let job = || -> Result<Vec<PathBuf>, CliError> {
        let format = config.output.format;
        let artifacts = match &cli.command {
            Command::Bond { maturities } => {
                let ts = maturities.as_deref().unwrap_or(&config.bond.maturities);
                vec![commands::render_bond(&cmd_bond(&config, ts)?, format)]
            }
            Command::Fra => vec![commands::render_fra(&cmd_fra(&config)?, format)],
            Command::Caplet { .. } => {
                vec![commands::render_caplet(&cmd_caplet(&config, g.mc)?, format)]
            }
            Command::Simulate => cmd_simulate(&config)?,
            Command::Calibrate { quotes } => {
                let run = cmd_calibrate(&config, quotes.as_deref())?;
                if !run.result.converged {
                    eprintln!("warning: calibration did not converge");
                }
                if !run.result.kappa_identifiable {
                    eprintln!(
                        "warning: all FRA quotes share one reset date; kappa is not identified"
                    );
                }
                if let Some(err) = run.kappa_error(&config) {
                    if err.abs() > 0.05 {
                        eprintln!(
                            "warning: fitted kappa is {err:+.4} away from the generating value"
                        );
                    }
                }
                run.artifacts()
            }
            Command::Config => vec![output::Artifact::new("config.json", config.to_json())],
        };
        output::write_all(&config.output.dir, &artifacts)
    };
    match g.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}
