//! `sivsim`: simulate and analyse the optically interfaced spin-3/2 defect.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver error, 4 input
//! parse error (CSV or sequence DSL), 5 fit failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "sivsim",
    version,
    about = "Spin-3/2 colour-centre simulator and analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation; writes a CSV trace plus a JSON parameter sidecar.
    Simulate {
        what: SimulateKind,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit a model to a trace and print the result as JSON.
    Fit {
        #[command(subcommand)]
        what: commands::fit::FitCommand,
    },
    /// Execute a pulse-sequence DSL file.
    Run {
        /// Sequence file.
        file: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// List the configuration keys accepted by --set.
    Keys,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SimulateKind {
    Ple,
    Odmr,
    Rabi,
    Fid,
    Echo,
    Pumping,
    Linewidth,
    A2a1,
}

impl SimulateKind {
    fn name(&self) -> &'static str {
        match self {
            SimulateKind::Ple => "ple",
            SimulateKind::Odmr => "odmr",
            SimulateKind::Rabi => "rabi",
            SimulateKind::Fid => "fid",
            SimulateKind::Echo => "echo",
            SimulateKind::Pumping => "pumping",
            SimulateKind::Linewidth => "linewidth",
            SimulateKind::A2a1 => "a2a1",
        }
    }
}

#[derive(Args)]
pub struct CommonArgs {
    /// Parameter preset (main_text or s7).
    #[arg(long, default_value = "main_text")]
    preset: String,
    /// Load parameters from a flat config file or a JSON sidecar.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one parameter (repeatable): --set key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output path; the sidecar is written next to it with a .json suffix.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Seed for noise injection (the noise_sigma key sets the level).
    #[arg(long)]
    seed: Option<u64>,
}

/// Application error with its exit code.
#[derive(Debug)]
pub enum AppError {
    /// Exit 2.
    Config(String),
    /// Exit 3.
    Solver(String),
    /// Exit 4.
    ParseInput(String),
    /// Exit 5.
    Fit(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Solver(_) => 3,
            AppError::ParseInput(_) => 4,
            AppError::Fit(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m)
            | AppError::Solver(m)
            | AppError::ParseInput(m)
            | AppError::Fit(m) => m,
        }
    }
}

impl From<config::ConfigError> for AppError {
    fn from(e: config::ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<sivsim::lindblad::LindbladError> for AppError {
    fn from(e: sivsim::lindblad::LindbladError) -> Self {
        AppError::Solver(e.to_string())
    }
}

impl From<sivsim::pulse::PulseError> for AppError {
    fn from(e: sivsim::pulse::PulseError) -> Self {
        match e {
            sivsim::pulse::PulseError::Parse(p) => AppError::ParseInput(p.to_string()),
            other => AppError::Solver(other.to_string()),
        }
    }
}

fn resolve_config(common: &CommonArgs) -> Result<RunConfig, AppError> {
    let mut config = RunConfig::preset(&common.preset)?;
    if let Some(path) = &common.config {
        config.apply_file(path)?;
    }
    config.apply_overrides(&common.sets)?;
    if let Some(seed) = common.seed {
        config
            .set("seed", &seed.to_string())
            .map_err(AppError::from)?;
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Simulate { what, common } => {
            let config = resolve_config(&common)?;
            commands::simulate::run(what, &config, common.out.as_deref())
        }
        Command::Fit { what } => commands::fit::run(what),
        Command::Run { file, common } => {
            let config = resolve_config(&common)?;
            commands::run::run(&file, &config, common.out.as_deref())
        }
        Command::Keys => {
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for (key, doc) in config::KEYS {
                // A closed pipe (e.g. `sivsim keys | head`) is not an error.
                if writeln!(out, "{key:20} {doc}").is_err() {
                    break;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sivsim: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
