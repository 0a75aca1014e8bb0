//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{Meta, Output};

#[derive(Debug, Parser)]
#[command(name = "shadowlab", version, about = "Classical shadows under gate-dependent noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Noisy frame operator report for an ensemble and noise model.
    Frame(Args),
    /// Sampled shadow estimate of an observable.
    Estimate(Args),
    /// Robust-shadow calibration run on |0…0⟩.
    Calibrate(Args),
    /// Bias budget: naive, general and Pauli-channel bounds against the exact bias.
    Bounds(Args),
    /// Verdict grid for robust mitigation over (f_eff, f_m).
    MitigationMap(Args),
    /// Tail frequencies of random-offset concentration.
    Concentrate(Args),
    /// Reproduce a named experiment with CSV, JSON and SVG outputs.
    Scenario(Args),
}

#[derive(Debug, Clone, PartialEq, Eq, clap::Args)]
pub struct Args {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed; defaults to 0 when neither is given.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores); results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Frame(_) => "frame",
            Command::Estimate(_) => "estimate",
            Command::Calibrate(_) => "calibrate",
            Command::Bounds(_) => "bounds",
            Command::MitigationMap(_) => "mitigation-map",
            Command::Concentrate(_) => "concentrate",
            Command::Scenario(_) => "scenario",
        }
    }

    pub fn args(&self) -> &Args {
        match self {
            Command::Frame(a)
            | Command::Estimate(a)
            | Command::Calibrate(a)
            | Command::Bounds(a)
            | Command::MitigationMap(a)
            | Command::Concentrate(a)
            | Command::Scenario(a) => a,
        }
    }
}

/// Runs one command and returns its summary lines.
pub fn run(command: &Command) -> CliResult<Vec<String>> {
    let args = command.args();
    let cfg = Config::load(&args.config)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let mut out = Output::create(&args.out, Meta::new(command.name(), seed, &cfg))?;
    let f = match command {
        Command::Frame(_) => commands::frame,
        Command::Estimate(_) => commands::estimate,
        Command::Calibrate(_) => commands::calibrate,
        Command::Bounds(_) => commands::bounds,
        Command::MitigationMap(_) => commands::mitigation_map,
        Command::Concentrate(_) => commands::concentrate,
        Command::Scenario(_) => commands::scenario,
    };
    let mut lines = match args.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
            pool.install(|| f(&cfg, seed, &mut out))?
        }
        None => f(&cfg, seed, &mut out)?,
    };
    for p in out.written() {
        lines.push(format!("wrote {}", p.display()));
    }
    Ok(lines)
}

/// Parses `argv`, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("shadowlab: {e}");
            e.exit_code()
        }
    }
}
