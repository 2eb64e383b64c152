//! `infostream`: decompose a document stream into subtopics, estimate
//! multifractal spectra and rank subtopics by spectral similarity.

mod commands;
mod config;
mod error;
mod output;
mod series;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{RunConfig, SharedArgs};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "infostream", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Split a corpus into subtopic, other and duplicate daily series.
    Decompose {
        /// Corpus JSONL with `id`, `date`, `text` per line.
        #[arg(long)]
        corpus: PathBuf,
        /// Subtopic queries (TOML `[[topics]]` or JSON).
        #[arg(long)]
        topics: PathBuf,
        /// Daily scanned totals, CSV `date,count`; required for `--normalize rates`.
        #[arg(long)]
        totals: Option<PathBuf>,
        /// First day of the analysis range (default: earliest document).
        #[arg(long, value_name = "DATE")]
        from: Option<String>,
        /// Last day of the analysis range (default: latest document).
        #[arg(long, value_name = "DATE")]
        to: Option<String>,
    },
    /// Estimate the multifractal spectrum of each series (files or directories of CSVs).
    Spectrum {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Rank subtopic spectra by distance to the main spectrum.
    Compare {
        /// Spectrum JSON of the main stream.
        #[arg(long)]
        main: PathBuf,
        /// Directory of subtopic spectrum JSONs.
        #[arg(long)]
        subtopics: PathBuf,
    },
    /// Generate a synthetic corpus with known ground truth.
    Simulate {
        /// Simulation spec (TOML or JSON).
        #[arg(long)]
        spec: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.shared)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Decompose { corpus, topics, totals, from, to } => commands::decompose(
            &commands::DecomposeInput {
                corpus: corpus.clone(),
                topics: topics.clone(),
                totals: totals.clone(),
                from: from.clone(),
                to: to.clone(),
            },
            &cfg,
        ),
        Command::Spectrum { inputs } => commands::spectrum(inputs, &cfg),
        Command::Compare { main, subtopics } => commands::compare(main, subtopics, &cfg),
        Command::Simulate { spec } => commands::simulate(spec, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
