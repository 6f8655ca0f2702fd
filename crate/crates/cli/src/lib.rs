//! Experiment harness: config loading, the seven experiments, CSV/SVG
//! output and run manifests.

pub mod checks;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod svg;

use std::path::PathBuf;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};

use output::RunDir;

/// Result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub experiment: Experiment,
    pub passed: bool,
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Applies the command-line overrides and checks the config matches the
/// requested subcommand.
pub fn prepare(
    requested: Experiment,
    mut config: ExperimentConfig,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig> {
    if config.experiment != requested {
        return Err(CliError::WrongExperiment {
            requested: requested.name().into(),
            found: config.experiment.name().into(),
        });
    }
    if let Some(s) = seed {
        config.seeds = vec![s];
    }
    if let Some(dir) = out {
        config.out_dir = dir;
    }
    Ok(config)
}

/// Runs the experiment described by `config` and writes its outputs.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let mut dir = RunDir::new(&config.out_dir);
    let verdict = experiments::dispatch(config, &mut dir)?;
    let files = dir.finish(config, &config.seeds, verdict.passed)?;
    Ok(Outcome {
        experiment: config.experiment,
        passed: verdict.passed,
        lines: verdict.lines,
        files,
    })
}
