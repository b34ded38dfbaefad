use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use nopo_cli::{config, exit_code, presets, run, ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "nopo", version, about = "Nondegenerate OPO simulation and verification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML config, or rerun the manifest.json of an earlier run.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report frequencies in physical units.
        #[arg(long)]
        physical_units: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a built-in experiment.
    Preset {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        physical_units: bool,
        /// Only evaluate closed forms.
        #[arg(long)]
        analytic_only: bool,
        /// Print the preset as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// List built-in experiments.
    ListPresets,
    /// Evaluate the closed forms of a preset without simulating.
    Analytic {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn apply(cfg: &mut ExperimentConfig, out: Option<PathBuf>, seed: Option<u64>, physical_units: bool) {
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    cfg.physical_units |= physical_units;
}

fn preset(name: &str) -> Result<ExperimentConfig> {
    presets::find(name)
        .map(|p| p.config)
        .ok_or_else(|| anyhow!(ConfigError(format!("unknown preset `{name}` (see `nopo list-presets`)"))))
}

fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let s = run(cfg)?;
    if let (Some(ok), Some(bad)) = (s.n_ok, s.n_faulted) {
        log::info!("{ok} trajectories, {bad} faulted");
    }
    for f in &s.files {
        println!("{}", s.out_dir.join(f).display());
    }
    println!("{}", s.out_dir.join("manifest.json").display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, physical_units, seed } => {
            let mut cfg = config::load(&config)?;
            apply(&mut cfg, out, seed, physical_units);
            execute(&cfg)
        }
        Command::Preset { name, seed, out, physical_units, analytic_only, print_config } => {
            let mut cfg = preset(&name)?;
            apply(&mut cfg, out, seed, physical_units);
            cfg.analytic_only |= analytic_only;
            if print_config {
                print!("{}", cfg.to_toml()?);
                return Ok(());
            }
            execute(&cfg)
        }
        Command::ListPresets => {
            for p in presets::catalog() {
                println!("{:<16} {}", p.name, p.summary);
            }
            Ok(())
        }
        Command::Analytic { name, out } => {
            let mut cfg = preset(&name)?;
            apply(&mut cfg, out, None, false);
            cfg.analytic_only = true;
            execute(&cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
