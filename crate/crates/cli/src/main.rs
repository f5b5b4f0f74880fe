//! `ctsim`: run simulations, sweep experiment grids and compare tracing methods.

mod compare;
mod files;
mod run;
mod svg;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctsim_core::SimConfig;

#[derive(Parser)]
#[command(name = "ctsim", version, about = "Agent-based epidemic simulator with digital contact tracing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
pub struct ConfigArgs {
    /// YAML simulation config; defaults are used when omitted.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config field, e.g. `--set beta=0.5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trace and metrics.
    Run(run::RunArgs),
    /// Run a grid of methods, β values, adoption rates and seeds.
    Sweep(sweep::SweepArgs),
    /// Fit Pareto curves, ΔR̂ and cost tables from a sweep manifest.
    Compare(compare::CompareArgs),
    /// Check that a config parses and is valid.
    ValidateConfig(ConfigArgs),
    /// Summary epidemiology of one or more traces.
    EpiStats(run::EpiStatsArgs),
}

/// Errors the user can fix by pointing at a different file.
#[derive(Debug)]
pub struct MissingInput(pub PathBuf);

impl std::fmt::Display for MissingInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "file not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

pub fn require_file(p: &std::path::Path) -> anyhow::Result<()> {
    if !p.is_file() {
        return Err(MissingInput(p.to_path_buf()).into());
    }
    Ok(())
}

/// Loads the base config and applies overrides, in order.
pub fn load_config(args: &ConfigArgs) -> anyhow::Result<SimConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            require_file(p)?;
            SimConfig::from_path(p)?
        }
        None => SimConfig::default(),
    };
    for o in &args.overrides {
        cfg.set(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Output root: the flag, else `$CTSIM_OUT`, else `ctsim-out`.
pub fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("CTSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ctsim-out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => run::cmd_run(a),
        Command::Sweep(a) => sweep::cmd_sweep(a),
        Command::Compare(a) => compare::cmd_compare(a),
        Command::ValidateConfig(a) => load_config(&a).map(|_| println!("config OK")),
        Command::EpiStats(a) => run::cmd_epi_stats(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<MissingInput>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
