use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};
use renewal_cli::commands;
use renewal_cli::config::{GenerateConfig, RunConfig};
use renewal_cli::CliError;

/// Next-arrival forecasting over discrete event grids: censoring-aware
/// Weibull outputs from a recurrent network, trained on transaction logs.
#[derive(Parser)]
#[command(name = "renewal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write a checkpoint plus a loss-history CSV.
    Train {
        /// Run configuration (key = value lines).
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Where to write the trained checkpoint.
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Where to write the loss history (iteration,loss).
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Overrides the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Forecast each subject's next arrival per process at the end of the
    /// training window.
    Predict {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Checkpoint to load.
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Where to write the predictions CSV.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Score forecasts against arrivals in the holdout window after tau.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Checkpoint to load.
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Where to write the metrics report CSV.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Sample a synthetic transaction log with known ground truth.
    Generate {
        /// Generator configuration (key = value lines).
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Where to write the transactions CSV; ground truth lands next
        /// to it as <out>.truth.csv.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Overrides the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train { config, checkpoint, out, seed } => {
            let mut cfg = RunConfig::from_path(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            commands::cmd_train(&cfg, &checkpoint, &out)
        }
        Command::Predict { config, checkpoint, out } => {
            let cfg = RunConfig::from_path(&config)?;
            commands::cmd_predict(&cfg, &checkpoint, &out)
        }
        Command::Evaluate { config, checkpoint, out } => {
            let cfg = RunConfig::from_path(&config)?;
            commands::cmd_evaluate(&cfg, &checkpoint, &out)
        }
        Command::Generate { config, out, seed } => {
            let mut cfg = GenerateConfig::from_path(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            commands::cmd_generate(&cfg, &out)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err}");
        process::exit(err.exit_code());
    }
}
