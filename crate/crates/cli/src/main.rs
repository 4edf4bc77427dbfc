//! `magwake`: simulate vessel magnetic wakes, build training sets, train and
//! evaluate the parameter estimator.
//!
//! Exit codes: 0 success, 2 configuration, 3 physics domain, 4 training
//! divergence, 5 IO.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{FilterArg, LossArg, Profile, TrainArgs};
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "magwake",
    version,
    about = "Vessel magnetic wake simulation and parameter estimation"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sensor series and normalised 2D wake map for one scenario.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for series.csv and map.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Skip the 2D map.
        #[arg(long)]
        no_map: bool,
    },
    /// Synthesise a training set over the parameter grid.
    GenDataset {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        profile: Option<Profile>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a per-sample summary CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Build the full grid without stopping at the size estimate.
        #[arg(long)]
        yes: bool,
    },
    /// Train the estimator; writes a checkpoint and per-iteration history.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        history: PathBuf,
        /// Continue from this checkpoint's step counter.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long, value_enum)]
        loss: Option<LossArg>,
        #[arg(long, value_enum)]
        alpha_filter: Option<FilterArg>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Length error of a checkpoint on a dataset's held-out split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Metrics CSV; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error against track angle and depth, and the length scatter.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Output directory for angle.csv, depth.csv and scatter.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot size thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate { config, out, no_map } => {
            commands::simulate(&RunConfig::load(Some(&config))?, &out, !no_map)
        }
        Command::GenDataset {
            config,
            profile,
            out,
            csv,
            yes,
        } => {
            commands::gen_dataset(&RunConfig::load(config.as_deref())?, profile, &out, csv.as_deref(), yes).map(|_| ())
        }
        Command::Train {
            config,
            dataset,
            out,
            history,
            resume,
            loss,
            alpha_filter,
            iterations,
        } => commands::train_cmd(
            &RunConfig::load(config.as_deref())?,
            &TrainArgs {
                dataset: &dataset,
                checkpoint: &out,
                history: &history,
                resume: resume.as_deref(),
                loss,
                filter: alpha_filter,
                iterations,
            },
        ),
        Command::Evaluate {
            checkpoint,
            dataset,
            out,
        } => commands::evaluate(&checkpoint, &dataset, out.as_deref()),
        Command::Sweep {
            config,
            checkpoint,
            out,
        } => commands::sweep(&RunConfig::load(config.as_deref())?, &checkpoint, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
