mod cluster_ages;
mod concurrency_check;
mod disco_maze;
mod grad_check;
mod removal_ablation;
mod tabular_oracle;
mod toy_density;

use recode_core::Atom;

pub use cluster_ages::age_histogram;
pub use removal_ablation::{bin_cvs, BinCvs};
pub use toy_density::quadrant_share;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::output::{num, RunDir, Table};

/// Verdict and human-readable summary of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub lines: Vec<String>,
}

pub fn dispatch(config: &ExperimentConfig, run: &mut RunDir) -> Result<Verdict> {
    match config.experiment {
        Experiment::ToyDensity => toy_density::run(config, run),
        Experiment::RemovalAblation => removal_ablation::run(config, run),
        Experiment::DiscoMaze => disco_maze::run(config, run),
        Experiment::ClusterAges => cluster_ages::run(config, run),
        Experiment::TabularOracle => tabular_oracle::run(config, run),
        Experiment::GradCheck => grad_check::run(config, run),
        Experiment::ConcurrencyCheck => concurrency_check::run(config, run),
    }
}

/// Atom table for 2-D memories.
fn atom_table(atoms: &[Atom]) -> Table {
    let mut t = Table::new(&["x", "y", "count", "born"]);
    for a in atoms {
        t.push(vec![num(a.position[0]), num(a.position[1]), num(a.count), a.born.to_string()]);
    }
    t
}

fn ok_str(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}
