//! Command-line front end: train the content model, extract task outputs,
//! and generate synthetic corpora.

mod common;
mod error;
mod manifest;
mod order;
mod synth;
mod tasks;
mod train;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "mallows-content",
    version,
    about = "Bayesian content model over shared topic orderings: training, alignment, segmentation, ordering, and synthetic data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the collapsed Gibbs sampler and write one posterior sample per
    /// chain, plus the vocabulary and a run manifest.
    Train(train::TrainArgs),
    /// Cluster paragraphs across documents by sampled topic; scores against
    /// headings when the corpus has them.
    Align(tasks::TaskArgs),
    /// Segment each document at sampled topic changes; scores against
    /// heading runs when the corpus has them.
    Segment(tasks::TaskArgs),
    /// Order the sections of held-out documents by most probable topic and
    /// score against the file order.
    Order(order::OrderArgs),
    /// Generate a corpus from the generative process along with all ground
    /// truth.
    Synth(synth::SynthArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(args) => train::run(args),
        Command::Align(args) => tasks::run_align(args),
        Command::Segment(args) => tasks::run_segment(args),
        Command::Order(args) => order::run(args),
        Command::Synth(args) => synth::run(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
