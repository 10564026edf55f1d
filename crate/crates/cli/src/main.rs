//! `bosenls`: command-line front end. Each subcommand reads an optional TOML
//! config, writes its artifacts and a `manifest.json` into the output
//! directory, and exits with 0 on success, 2 on configuration errors, 3 on
//! numerical failures and 4 when an estimator is inconclusive.

mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::commands::Status;
use crate::config::{resolve, Command, Issue, Overrides, RunConfig};
use crate::output::{to_json, Artifacts};

#[derive(Parser)]
#[command(name = "bosenls", version, about = "Trapped 2D Bose gases: NLS, Hartree and many-body numerics")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Shoot the ground-state profile and report the critical coupling
    Townes(RunArgs),
    /// Minimize the NLS energy in the trap
    Nls(RunArgs),
    /// Minimize the Hartree energy for each particle number
    Hartree(RunArgs),
    /// Hartree-to-NLS interaction error over a list of length scales
    SweepLambda(RunArgs),
    /// Search for the infimum of the stability ratio of an interaction
    Stability(RunArgs),
    /// Exact diagonalization in a truncated mode basis
    Manybody(RunArgs),
    /// De Finetti measures of random or supplied symmetric states
    Definetti(RunArgs),
    /// Exponent bootstrap schedule in exact arithmetic
    Exponents(RunArgs),
    /// Run the command named in the config file
    Run(RunArgs),
    /// Print the fully resolved config, or every problem with it
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        command: Option<Command>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; defaults apply to everything not given
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $BOSENLS_OUTPUT/<command>]
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent jobs [default: all cores]
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("invalid configuration")]
    Config(Vec<Issue>),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Numerical(#[from] bosenls::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Input(_) => 2,
            Failure::Numerical(bosenls::Error::Inconclusive(_)) => 4,
            Failure::Numerical(_) | Failure::Io(_) => 3,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: Command,
    config: &'a RunConfig,
    files: &'a [String],
}

fn load(path: Option<&PathBuf>, command: Option<Command>, overrides: &Overrides) -> Result<RunConfig, Failure> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    resolve(&text, command, overrides).map_err(Failure::Config)
}

fn execute(args: &RunArgs, command: Option<Command>) -> Result<Status, Failure> {
    let overrides = Overrides { seed: args.seed, output: args.output.clone() };
    let config = load(args.config.as_ref(), command, &overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Input(format!("cannot start {:?} workers: {e}", args.jobs)))?;
    let mut out = Artifacts::create(&config.output)?;
    let status = pool.install(|| commands::run(&config, &mut out))?;
    let files = out.files().to_vec();
    let manifest =
        Manifest { tool: "bosenls", version: env!("CARGO_PKG_VERSION"), command: config.command, config: &config, files: &files };
    out.write_json("manifest.json", &manifest)?;
    eprintln!("wrote {} files to {}", files.len() + 1, out.dir().display());
    Ok(status)
}

fn report(failure: &Failure) {
    match failure {
        Failure::Config(issues) => {
            for issue in issues {
                eprintln!("error: {issue}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Sub::Validate { config, command } => {
            load(config.as_ref(), *command, &Overrides::default()).and_then(|c| {
                let json = to_json(&c).map_err(std::io::Error::other)?;
                print!("{}", String::from_utf8_lossy(&json));
                Ok(Status::Done)
            })
        }
        Sub::Run(args) => execute(args, None),
        Sub::Townes(args) => execute(args, Some(Command::Townes)),
        Sub::Nls(args) => execute(args, Some(Command::Nls)),
        Sub::Hartree(args) => execute(args, Some(Command::Hartree)),
        Sub::SweepLambda(args) => execute(args, Some(Command::SweepLambda)),
        Sub::Stability(args) => execute(args, Some(Command::Stability)),
        Sub::Manybody(args) => execute(args, Some(Command::Manybody)),
        Sub::Definetti(args) => execute(args, Some(Command::Definetti)),
        Sub::Exponents(args) => execute(args, Some(Command::Exponents)),
    };
    match result {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Inconclusive(why)) => {
            eprintln!("inconclusive: {why}");
            ExitCode::from(4)
        }
        Err(failure) => {
            report(&failure);
            ExitCode::from(failure.exit_code())
        }
    }
}
