use std::path::PathBuf;
use std::process::ExitCode;

use airslice_cli::config::{ExperimentConfig, ExperimentName};
use airslice_cli::{commands, experiments, validate};
use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

/// Association and EDCA control experiments for virtualized multi-cell WLANs.
#[derive(Debug, Parser)]
#[command(name = "airslice", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Args)]
struct Common {
    /// JSON config; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "AIRSLICE_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the analytics, simulation, control and GP batteries.
    Validate,
    /// Simulate the BSS in the `simulate` config section.
    Simulate,
    /// Draw one scenario and solve it with both association schemes.
    Optimize,
    /// Run one experiment family, or all of them.
    Experiment {
        #[arg(long, value_enum)]
        experiment: Option<ExperimentName>,
        /// Run every family in turn.
        #[arg(long, conflicts_with = "experiment")]
        all: bool,
    },
    /// Invert a CSV table of target τ values into EDCA parameters.
    Params {
        /// CSV with a `tau` column and an optional `p` column.
        table: PathBuf,
        /// Follow the cascade with a joint local search.
        #[arg(long)]
        refined: bool,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(r) = common.replications {
        cfg.replications = r;
    }
    if common.jobs.is_some() {
        cfg.jobs = common.jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = load(&cli.common)?;
    match cli.command {
        Command::Validate => {
            let out = validate::run_validate(&cfg)?;
            let failures: Vec<_> = out.failures().collect();
            for f in &failures {
                eprintln!(
                    "FAIL [{}] {}: measured {} reference {} error {} tolerance {}",
                    f.battery, f.case, f.measured, f.reference, f.error, f.tolerance
                );
            }
            println!(
                "{} checks, {} failed; wrote {}",
                out.checks.iter().filter(|c| c.gating).count(),
                failures.len(),
                list(&out.files)
            );
            Ok(failures.is_empty())
        }
        Command::Simulate => {
            println!("wrote {}", commands::simulate(&cfg)?.display());
            Ok(true)
        }
        Command::Optimize => {
            println!("wrote {}", list(&commands::optimize(&cfg)?));
            Ok(true)
        }
        Command::Experiment { experiment, all } => {
            if experiment.is_some() {
                cfg.experiment = experiment;
            }
            let names: Vec<ExperimentName> = match (all, cfg.experiment) {
                (true, _) => ExperimentName::ALL.to_vec(),
                (false, Some(name)) => vec![name],
                (false, None) => bail!("pass --experiment <name> or --all, or set `experiment` in the config"),
            };
            for name in names {
                let out = experiments::run_experiment(name, &cfg)?;
                let excluded = out.runs.iter().filter(|r| r.gp.is_none()).count();
                println!(
                    "{}: {} replications, {} excluded; wrote {}",
                    name.as_str(),
                    out.runs.len(),
                    excluded,
                    list(&out.files)
                );
            }
            Ok(true)
        }
        Command::Params { table, refined } => {
            println!("wrote {}", commands::params(&cfg, &table, refined)?.display());
            Ok(true)
        }
    }
}

fn list(files: &[PathBuf]) -> String {
    files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>().join(", ")
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
