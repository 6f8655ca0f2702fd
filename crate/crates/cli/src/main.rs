use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use recode_cli::{prepare, run, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "recode", version = recode_cli::output::VERSION, about = "Run memory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density of a growing 2-D stream under several discounts.
    ToyDensity(Common),
    /// Spatial uniformity of atoms under each removal strategy.
    RemovalAblation(Common),
    /// Exploration of a noisy maze against a random baseline.
    DiscoMaze(Common),
    /// Age distribution of atoms after a long maze run.
    ClusterAges(Common),
    /// Exact count check on a one-hot gridworld.
    TabularOracle(Common),
    /// Finite-difference check of the action-prediction gradient.
    GradCheck(Common),
    /// Shared-memory service against sequential replay.
    ConcurrencyCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Run this seed only.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::ToyDensity(a) => (Experiment::ToyDensity, a),
        Command::RemovalAblation(a) => (Experiment::RemovalAblation, a),
        Command::DiscoMaze(a) => (Experiment::DiscoMaze, a),
        Command::ClusterAges(a) => (Experiment::ClusterAges, a),
        Command::TabularOracle(a) => (Experiment::TabularOracle, a),
        Command::GradCheck(a) => (Experiment::GradCheck, a),
        Command::ConcurrencyCheck(a) => (Experiment::ConcurrencyCheck, a),
    };
    let outcome = ExperimentConfig::load(&args.config)
        .and_then(|c| prepare(experiment, c, args.seed, args.out))
        .and_then(|c| run(&c));
    match outcome {
        Ok(o) => {
            for line in &o.lines {
                println!("{line}");
            }
            println!("{}: {}", o.experiment, if o.passed { "PASS" } else { "FAIL" });
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
