//! `semantify`: corpus statistics, training, evaluation, sweeps, prediction,
//! triple export and the curation backend.

mod args;
mod commands;
mod output;
mod serve;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Bad flag combinations or values detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_REMOTE: u8 = 4;

#[derive(Parser)]
#[command(name = "semantify", version, about = "Bioassay semantification toolkit")]
struct Cli {
    /// Master seed; folds, sampling and shuffling use named sub-seeds of it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus size, vocabulary and annotation-length histogram.
    Stats(commands::StatsArgs),
    /// Write the binary training pairs.
    Pairs(commands::PairsArgs),
    /// Train a native scorer and save it.
    Train(commands::TrainArgs),
    /// K-fold cross-validation in both evaluation modes.
    Evaluate(commands::EvaluateArgs),
    /// Sweep the number of negatives per assay.
    Sweep(commands::SweepArgs),
    /// Rank statements for one assay.
    Predict(commands::PredictArgs),
    /// Export gold annotations as triple files.
    Export(commands::ExportArgs),
    /// Tabulate several triple files side by side.
    Compare(commands::CompareArgs),
    /// Run the curation backend.
    Serve(serve::ServeArgs),
    /// Generate a synthetic corpus.
    Synth(commands::SynthArgs),
    /// Check the inference service.
    Health(commands::HealthArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<semantify_core::Error>() {
            return match e {
                e if e.is_remote() => EXIT_REMOTE,
                semantify_core::Error::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_DATA;
        }
    }
    1
}

/// The error chain joined with `: `, skipping causes already spelled out by
/// the message before them.
fn describe(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let part = cause.to_string();
        if text.contains(&part) {
            continue;
        }
        if !text.is_empty() {
            text.push_str(": ");
        }
        text.push_str(&part);
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let seed = cli.seed;
    let result = match cli.command {
        Command::Stats(a) => commands::stats(a, seed),
        Command::Pairs(a) => commands::pairs(a, seed),
        Command::Train(a) => commands::train(a, seed),
        Command::Evaluate(a) => commands::evaluate(a, seed),
        Command::Sweep(a) => commands::sweep(a, seed),
        Command::Predict(a) => commands::predict(a, seed),
        Command::Export(a) => commands::export(a, seed),
        Command::Compare(a) => commands::compare(a, seed),
        Command::Serve(a) => serve::serve(a, seed),
        Command::Synth(a) => commands::synth(a, seed),
        Command::Health(a) => commands::health(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
