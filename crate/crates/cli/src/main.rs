//! `rsh`: command-line front end for the self-healing prediction pipeline.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "rsh",
    version,
    about = "Self-healing prediction pipeline for dirty tabular data"
)]
struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides `cv.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output directory; overrides `report.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine rules, correct, prune and optionally normalize a dataset.
    Clean {
        input: PathBuf,
        /// Also z-score the numeric columns of the cleaned output.
        #[arg(long)]
        normalize: bool,
    },
    /// Cross-validate the full pipeline.
    Evaluate {
        input: PathBuf,
        /// Also rerun the plain classifiers on the literal data.
        #[arg(long)]
        baselines: bool,
    },
    /// Train the ensemble on a whole dataset and write a model bundle.
    Train { input: PathBuf },
    /// Predict labels for records with a trained model bundle.
    Predict {
        model: PathBuf,
        records: PathBuf,
        /// Repair records with the model's rules before predicting.
        #[arg(long)]
        repair: bool,
    },
    /// Dump the mined crisp and fuzzy rule sets.
    MineRules { input: PathBuf },
    /// Dump the selected masks and GA traces.
    SelectFeatures { input: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
