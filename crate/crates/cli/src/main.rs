//! `hartree`: command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod output;
mod verify;

use config::RunConfig;
use output::Output;

#[derive(Debug)]
pub enum CliError {
    /// Usage or configuration problem (exit 2).
    Config(String),
    /// A computation or check failed (exit 1).
    Failure(String),
}

impl From<hartree::Error> for CliError {
    fn from(e: hartree::Error) -> Self {
        use hartree::Error::*;
        match e {
            DimensionTooSmall(_)
            | AlphaOutOfRange { .. }
            | SOutOfRange { .. }
            | NonPositiveArgument(_)
            | MTooSmall(_)
            | CurvatureTooLarge { .. }
            | RhoOutOfRange { .. }
            | ExponentOutOfRange(_)
            | StepTooCoarse { .. }
            | NotCoaxial
            | InvalidInput(_) => CliError::Config(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("I/O error: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "hartree", version, about = "Multi-bubble constructions for the critical Hartree equation")]
struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `quadrature.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write outputs as files into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the resolved configuration with all defaults and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Sharp constants and derived exponents.
    Constants,
    /// Runs a property suite and prints one CSV row per check.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Samples dJ/dλ on a grid and fits the two-term expansion.
    Expansion,
    /// Solves the reduced system for (r̄, x̄'') and λ.
    Solve,
    /// Local Pohožaev residuals over the tube.
    Pohozaev,
    /// Sampled weighted norms of the ansatz.
    Norms,
    /// Sampled checks of the decay estimates.
    LemmaCheck,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Suite {
    Riesz,
    Hls,
    Invariance,
    Lemmas,
    Pohozaev,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg: RunConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.quadrature.seed = seed;
    }
    cfg.resolve()
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    let cfg = load(&cli)?;
    let mut out = Output::new(cli.out.clone())?;
    if cli.print_config {
        return out.json("config", &cfg);
    }
    match cli.command {
        None => Err(CliError::Config("no subcommand given (see --help)".into())),
        Some(Command::Constants) => commands::constants(&cfg, &mut out),
        Some(Command::Verify { suite }) => verify::run(&cfg, suite, &mut out),
        Some(Command::Expansion) => commands::expansion(&cfg, &mut out),
        Some(Command::Solve) => commands::solve(&cfg, &mut out),
        Some(Command::Pohozaev) => commands::pohozaev(&cfg, &mut out),
        Some(Command::Norms) => commands::norms(&cfg, &mut out),
        Some(Command::LemmaCheck) => commands::lemma_check_cmd(&cfg, &mut out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
