use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recode_core::agent::{run_episode, LocalNovelty, QTable};
use recode_core::embeddings::Identity;
use recode_core::env::{DiscoMaze, Environment, RenderMode};
use recode_core::RecodeMemory;

use super::disco_maze::EPISODE_HEADER;
use super::{ok_str, Verdict};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, RunDir, Table};
use crate::svg;

/// `(bin_start, atoms)` for bins `[k·width, (k+1)·width)` up to the oldest age.
pub fn age_histogram(ages: &[u64], width: u64) -> Vec<(u64, u64)> {
    let top = ages.iter().copied().max().unwrap_or(0) / width;
    let mut bins = vec![0u64; top as usize + 1];
    for &a in ages {
        bins[(a / width) as usize] += 1;
    }
    bins.into_iter()
        .enumerate()
        .map(|(k, n)| (k as u64 * width, n))
        .collect()
}

/// Lower median.
fn median(values: &[u64]) -> u64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    v[(v.len() - 1) / 2]
}

pub(super) fn run(config: &ExperimentConfig, out: &mut RunDir) -> Result<Verdict> {
    let params = config.cluster_ages.as_ref().expect("validated");
    let maze_cfg = config.maze.clone().expect("validated");
    let agent = config.agent.clone().expect("validated");
    let cap = maze_cfg.max_steps;
    let mut summary = Table::new(&[
        "seed",
        "episodes",
        "env_steps",
        "memory_steps",
        "atoms",
        "median_age",
        "max_age",
        "episode_cap",
    ]);
    let mut lines = Vec::new();
    let mut passed = true;
    for &seed in &config.seeds {
        let mut env = DiscoMaze::new(maze_cfg.clone(), RenderMode::PositionOnly)?.with_color_seed(seed);
        let dim = env.observation_dim(RenderMode::PositionOnly);
        let mut novelty = LocalNovelty::new(RecodeMemory::new(config.memory_for(seed), dim)?);
        let mut q = QTable::with_initial(env.num_actions(), agent.initial_q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut episodes = Table::new(&EPISODE_HEADER);
        let mut env_steps = 0;
        for ep in 0..params.episodes {
            let r = run_episode(&mut env, &Identity { dim }, &mut novelty, &mut q, &agent, u64::MAX, &mut rng)?;
            env_steps += r.length;
            episodes.push(vec![
                ep.to_string(),
                r.length.to_string(),
                num(r.extrinsic_return),
                num(r.intrinsic_sum),
                r.unique_states.to_string(),
                r.cause.name().to_string(),
            ]);
        }
        let mem = &novelty.memory;
        let ages = mem.atom_ages();
        let hist = age_histogram(&ages, params.bin_width);
        let mut table = Table::new(&["bin_start", "bin_end", "atoms", "episode_cap"]);
        for &(lo, n) in &hist {
            table.push(vec![
                lo.to_string(),
                (lo + params.bin_width).to_string(),
                n.to_string(),
                cap.to_string(),
            ]);
        }
        let med = median(&ages);
        let max = ages.iter().copied().max().unwrap_or(0);
        let ok = med > cap && max <= mem.steps_processed();
        passed &= ok;
        summary.push(vec![
            seed.to_string(),
            params.episodes.to_string(),
            env_steps.to_string(),
            mem.steps_processed().to_string(),
            mem.len().to_string(),
            med.to_string(),
            max.to_string(),
            cap.to_string(),
        ]);
        lines.push(format!(
            "seed {seed}: median atom age {med} over {} atoms after {} episodes ({env_steps} steps) vs cap {cap} [{}]",
            mem.len(),
            params.episodes,
            ok_str(ok)
        ));
        out.table(&format!("ages_seed{seed}.csv"), &table);
        out.table(&format!("episodes_seed{seed}.csv"), &episodes);
        let bars: Vec<_> = hist
            .iter()
            .map(|&(lo, n)| (lo as f64, (lo + params.bin_width) as f64, n as f64))
            .collect();
        out.text(
            &format!("ages_seed{seed}.svg"),
            svg::histogram(&format!("atom ages, seed {seed} (dashed: episode cap)"), &bars, Some(cap as f64)),
        );
    }
    out.table("summary.csv", &summary);
    Ok(Verdict { passed, lines })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_covers_every_age() {
        let ages = [0, 3, 9, 10, 25, 25];
        let h = age_histogram(&ages, 10);
        assert_eq!(h, vec![(0, 3), (10, 1), (20, 2)]);
        assert_eq!(h.iter().map(|b| b.1).sum::<u64>(), ages.len() as u64);
        assert_eq!(median(&ages), 9);
    }
}
