//! `sentio` command-line driver.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sentio::sentiment::LexiconProvider;

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sentio", version, about = "Sentiment-aware PPO trading experiments")]
struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for rollouts and evaluation episodes.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate, merge and align the configured data; writes `dataset.check`.
    Ingest,
    /// Label a `Date,Symbol,Text` news file with the keyword lexicon.
    Label {
        #[arg(long)]
        news: PathBuf,
        /// Defaults to `<out>/sentiment.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train a policy; writes `model.txt`, `training_log.csv` and `effective_config`.
    Train,
    /// Evaluate a saved model and write the report files.
    Evaluate {
        /// Defaults to `<out>/model.txt`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Overlay the buy-and-hold baseline in `comparison.svg`.
        #[arg(long)]
        with_baseline: bool,
    },
    /// Buy-and-hold report for the configured data or a given OHLCV file.
    Baseline {
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Tabulate average profit and net worth across run directories.
    Compare {
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Ingest => {
            let path = commands::ingest(&cfg)?;
            println!("{}", path.display());
        }
        Command::Label { news, output } => {
            let output = output.clone().unwrap_or_else(|| cfg.out_dir.join("sentiment.csv"));
            let path = commands::label(news, &LexiconProvider, &output)?;
            println!("{}", path.display());
        }
        Command::Train => {
            let path = commands::train_cmd(&cfg, cli.jobs)?;
            println!("{}", path.display());
        }
        Command::Evaluate { model, with_baseline } => {
            let model = model.clone().unwrap_or_else(|| cfg.out_dir.join("model.txt"));
            let path = commands::evaluate_cmd(&cfg, &model, *with_baseline, cli.jobs)?;
            println!("{}", path.display());
        }
        Command::Baseline { series } => {
            let path = commands::baseline_cmd(&cfg, series.as_deref())?;
            println!("{}", path.display());
        }
        Command::Compare { runs } => {
            let (_, table) = commands::compare(runs, &cfg.out_dir)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
