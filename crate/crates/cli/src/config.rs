//! Experiment configuration, one TOML file per run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use recode_core::agent::AgentConfig;
use recode_core::embeddings::{ApConfig, Block};
use recode_core::env::{DiscoMazeConfig, StreamSchedule};
use recode_core::{RecodeConfig, RemovalStrategy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ToyDensity,
    RemovalAblation,
    DiscoMaze,
    ClusterAges,
    TabularOracle,
    GradCheck,
    ConcurrencyCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::ToyDensity,
        Experiment::RemovalAblation,
        Experiment::DiscoMaze,
        Experiment::ClusterAges,
        Experiment::TabularOracle,
        Experiment::GradCheck,
        Experiment::ConcurrencyCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ToyDensity => "toy-density",
            Experiment::RemovalAblation => "removal-ablation",
            Experiment::DiscoMaze => "disco-maze",
            Experiment::ClusterAges => "cluster-ages",
            Experiment::TabularOracle => "tabular-oracle",
            Experiment::GradCheck => "grad-check",
            Experiment::ConcurrencyCheck => "concurrency-check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Memory settings; its `seed` is replaced per run.
    #[serde(default)]
    pub memory: RecodeConfig,
    pub stream: Option<StreamSchedule>,
    pub maze: Option<DiscoMazeConfig>,
    pub agent: Option<AgentConfig>,
    pub toy_density: Option<ToyDensity>,
    pub removal_ablation: Option<RemovalAblation>,
    pub disco_maze: Option<DiscoMazeRun>,
    pub cluster_ages: Option<ClusterAges>,
    pub tabular_oracle: Option<TabularOracle>,
    pub grad_check: Option<GradCheckRun>,
    pub concurrency_check: Option<ConcurrencyCheck>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyDensity {
    pub gammas: Vec<f64>,
    /// Upper corner of the bottom-left square whose count share is reported.
    pub quadrant: f64,
    pub conservation_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemovalAblation {
    pub strategies: Vec<RemovalStrategy>,
    pub bins: usize,
    pub extent: f64,
    /// Seeds on which the inverse-square count-CV must beat min-count.
    pub min_wins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoMazeRun {
    pub step_budget: u64,
    /// Seeds on which the noisy arm may not out-cover the clean one.
    pub noisy_min_wins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterAges {
    pub episodes: u64,
    pub bin_width: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularOracle {
    pub size: usize,
    pub start: (usize, usize),
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradCheckRun {
    pub model: ApConfig,
    pub batch_size: usize,
    /// Training steps taken before the check.
    pub warmup_steps: usize,
    pub samples: usize,
    pub threshold: f64,
    pub corrupt_block: Block,
    pub corrupt_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcurrencyCheck {
    pub actors: usize,
    pub submissions_per_actor: u64,
    pub free_running_actors: usize,
    pub dim: usize,
    pub conservation_tol: f64,
    pub probes: usize,
    pub removal_draws: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            CliError::Config {
                origin: origin.to_string(),
                line,
                message: e.message().to_string(),
            }
        })?;
        config.validate().map_err(|message| CliError::Config {
            origin: origin.to_string(),
            line: None,
            message,
        })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical serialisation.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.seeds.is_empty() {
            return Err("`seeds` must not be empty".into());
        }
        self.memory.validate().map_err(|e| e.to_string())?;
        if let Some(agent) = &self.agent {
            agent.validate().map_err(|e| e.to_string())?;
        }
        let missing = |section: &str| Err(format!("experiment `{}` needs a [{section}] section", self.experiment));
        match self.experiment {
            Experiment::ToyDensity if self.toy_density.is_none() => missing("toy_density"),
            Experiment::ToyDensity | Experiment::RemovalAblation if self.stream.is_none() => missing("stream"),
            Experiment::RemovalAblation if self.removal_ablation.is_none() => missing("removal_ablation"),
            Experiment::DiscoMaze | Experiment::ClusterAges if self.maze.is_none() => missing("maze"),
            Experiment::DiscoMaze | Experiment::ClusterAges if self.agent.is_none() => missing("agent"),
            Experiment::DiscoMaze if self.disco_maze.is_none() => missing("disco_maze"),
            Experiment::ClusterAges if self.cluster_ages.is_none() => missing("cluster_ages"),
            Experiment::TabularOracle if self.tabular_oracle.is_none() => missing("tabular_oracle"),
            Experiment::GradCheck if self.grad_check.is_none() => missing("grad_check"),
            Experiment::ConcurrencyCheck if self.concurrency_check.is_none() => missing("concurrency_check"),
            _ => Ok(()),
        }
    }

    /// Memory config for one seed.
    pub fn memory_for(&self, seed: u64) -> RecodeConfig {
        RecodeConfig {
            seed,
            ..self.memory.clone()
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "tabular-oracle"
seeds = [1, 2]

[memory]
capacity = 25
gamma = 1.0

[tabular_oracle]
size = 5
start = [2, 2]
steps = 100
"#;

    #[test]
    fn parses_and_hashes_stably() {
        let a = ExperimentConfig::from_toml(MINIMAL, "inline").unwrap();
        assert_eq!(a.memory.capacity, 25);
        assert_eq!(a.memory.k, 20);
        assert_eq!(a.out_dir, PathBuf::from("out"));
        let b = ExperimentConfig::from_toml(&a.to_toml(), "again").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = MINIMAL.replace("gamma = 1.0", "gamma = 1.0\ncolour = 3");
        match ExperimentConfig::from_toml(&text, "inline") {
            Err(CliError::Config { line, message, .. }) => {
                assert_eq!(line, Some(8));
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_section_and_bad_values() {
        let text = MINIMAL.replace("experiment = \"tabular-oracle\"", "experiment = \"grad-check\"");
        assert!(ExperimentConfig::from_toml(&text, "x").is_err());
        let text = MINIMAL.replace("gamma = 1.0", "gamma = 1.5");
        assert!(ExperimentConfig::from_toml(&text, "x").is_err());
        let text = MINIMAL.replace("seeds = [1, 2]", "seeds = []");
        assert!(ExperimentConfig::from_toml(&text, "x").is_err());
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
