mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "matgan", version, about = "Voxel GAN training and shape statistics", after_help = config::keys_help())]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Configuration file of key=value lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset of VGRID files and a manifest.
    Synth(commands::SynthArgs),
    /// Train the GAN on a directory of VGRID files.
    Train(commands::TrainArgs),
    /// Sample volumes from a trained generator.
    Generate(commands::GenerateArgs),
    /// Moment invariants per grid and their distribution summaries.
    Moments(commands::MomentsArgs),
    /// Compare two distribution summaries.
    Compare(commands::CompareArgs),
    /// Train and evaluate a linear SVM on discriminator features.
    Classify(commands::ClassifyArgs),
    /// Nearest training sample of each query in discriminator feature space.
    Nn(commands::NnArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config::RunConfig::load(cli.global.config.as_deref(), &cli.global.set).and_then(|cfg| {
        eprint!("{cfg}");
        match cli.command {
            Command::Synth(a) => commands::synth(&cfg, &a),
            Command::Train(a) => commands::train(&cfg, &a),
            Command::Generate(a) => commands::generate(&cfg, &a),
            Command::Moments(a) => commands::moments(&cfg, &a),
            Command::Compare(a) => commands::compare(&cfg, &a),
            Command::Classify(a) => commands::classify(&cfg, &a),
            Command::Nn(a) => commands::nn(&cfg, &a),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
