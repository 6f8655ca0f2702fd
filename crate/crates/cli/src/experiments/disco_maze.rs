use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recode_core::agent::{run_agent, AgentConfig, Coverage, LocalNovelty, NoNovelty, NoveltySource, QTable};
use recode_core::embeddings::Identity;
use recode_core::env::{Cell, DiscoMaze, Environment, RenderMode};
use recode_core::RecodeMemory;

use super::{ok_str, Verdict};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, RunDir, Table};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arm {
    Position,
    Full,
    Random,
}

impl Arm {
    const ALL: [Arm; 3] = [Arm::Position, Arm::Full, Arm::Random];

    fn name(self) -> &'static str {
        match self {
            Arm::Position => "recode_position",
            Arm::Full => "recode_full",
            Arm::Random => "random",
        }
    }

    fn mode(self) -> RenderMode {
        match self {
            Arm::Full => RenderMode::Full,
            _ => RenderMode::PositionOnly,
        }
    }
}

pub(super) const EPISODE_HEADER: [&str; 6] = [
    "episode",
    "length",
    "extrinsic_return",
    "intrinsic_sum",
    "unique_states",
    "cause",
];

struct ArmResult {
    coverage: Coverage,
    episodes: Table,
    memory: Option<RecodeMemory>,
}

fn run_arm(config: &ExperimentConfig, arm: Arm, seed: u64, budget: u64) -> Result<ArmResult> {
    let maze_cfg = config.maze.clone().expect("validated");
    let mut env = DiscoMaze::new(maze_cfg, arm.mode())?.with_color_seed(seed);
    let dim = env.observation_dim(arm.mode());
    let base = config.agent.clone().expect("validated");
    let agent = match arm {
        Arm::Random => AgentConfig {
            epsilon: 1.0,
            intrinsic_scale: 0.0,
            ..base
        },
        _ => base,
    };
    let mut local = match arm {
        Arm::Random => None,
        _ => Some(LocalNovelty::new(RecodeMemory::new(config.memory_for(seed), dim)?)),
    };
    let mut none = NoNovelty;
    let novelty: &mut dyn NoveltySource = match local.as_mut() {
        Some(l) => l,
        None => &mut none,
    };
    let mut q = QTable::with_initial(env.num_actions(), agent.initial_q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episodes = Table::new(&EPISODE_HEADER);
    let mut index = 0u64;
    let coverage = run_agent(
        &mut env,
        &Identity { dim },
        novelty,
        &mut q,
        &agent,
        budget,
        &mut rng,
        |r| {
            episodes.push(vec![
                index.to_string(),
                r.length.to_string(),
                num(r.extrinsic_return),
                num(r.intrinsic_sum),
                r.unique_states.to_string(),
                r.cause.name().to_string(),
            ]);
            index += 1;
        },
    )?;
    Ok(ArmResult {
        coverage,
        episodes,
        memory: local.map(|l| l.memory),
    })
}

pub(super) fn run(config: &ExperimentConfig, out: &mut RunDir) -> Result<Verdict> {
    let params = config.disco_maze.as_ref().expect("validated");
    let budget = params.step_budget;
    let mut summary = Table::new(&[
        "seed",
        "arm",
        "steps",
        "episodes",
        "unique_states",
        "goal_reached",
        "first_goal_step",
    ]);
    let mut lines = Vec::new();
    let mut passed = true;
    let mut noisy_ok = 0;
    let mut baseline_goals = 0;
    for &seed in &config.seeds {
        let mut curve = Table::new(&["arm", "steps", "unique_states"]);
        let mut series = Vec::new();
        let mut cov = Vec::new();
        for arm in Arm::ALL {
            let res = run_arm(config, arm, seed, budget)?;
            let c = &res.coverage;
            summary.push(vec![
                seed.to_string(),
                arm.name().to_string(),
                c.steps.to_string(),
                c.episodes.to_string(),
                c.unique_states.to_string(),
                c.goal_reached.to_string(),
                c.first_goal_step.map_or(String::new(), |s| s.to_string()),
            ]);
            for &(steps, unique) in &c.curve {
                curve.push(vec![arm.name().to_string(), steps.to_string(), unique.to_string()]);
            }
            series.push((
                arm.name().to_string(),
                c.curve.iter().map(|&(s, u)| (s as f64, u as f64)).collect(),
            ));
            out.table(&format!("episodes_{}_seed{seed}.csv", arm.name()), &res.episodes);
            if let (Arm::Position, Some(mem)) = (arm, &res.memory) {
                out.text(&format!("atoms_seed{seed}.svg"), overlay(config, mem, seed)?);
            }
            cov.push(res.coverage);
        }
        let (pos, full, rand) = (&cov[0], &cov[1], &cov[2]);
        let ok = pos.goal_reached && pos.unique_states > rand.unique_states;
        passed &= ok;
        noisy_ok += usize::from(full.unique_states <= pos.unique_states);
        baseline_goals += usize::from(rand.goal_reached);
        lines.push(format!(
            "seed {seed}: coverage position {} / full {} / random {}; goal position {} random {} [{}]",
            pos.unique_states,
            full.unique_states,
            rand.unique_states,
            pos.first_goal_step.map_or("never".into(), |s| format!("at step {s}")),
            rand.first_goal_step.map_or("never".into(), |s| format!("at step {s}")),
            ok_str(ok)
        ));
        out.table(&format!("coverage_seed{seed}.csv"), &curve);
        out.text(
            &format!("coverage_seed{seed}.svg"),
            svg::lines(&format!("unique states vs steps, seed {seed}"), &series),
        );
    }
    let noisy_pass = noisy_ok >= params.noisy_min_wins;
    passed &= noisy_pass;
    lines.push(format!(
        "full-render coverage <= position coverage on {noisy_ok}/{} seeds (need {}) [{}]",
        config.seeds.len(),
        params.noisy_min_wins,
        ok_str(noisy_pass)
    ));
    lines.push(format!("random baseline reached the goal on {baseline_goals}/{} seeds", config.seeds.len()));
    out.table("summary.csv", &summary);
    Ok(Verdict { passed, lines })
}

fn overlay(config: &ExperimentConfig, mem: &RecodeMemory, seed: u64) -> Result<String> {
    let maze = DiscoMaze::new(config.maze.clone().expect("validated"), RenderMode::PositionOnly)?;
    let walls: Vec<bool> = maze.layout().iter().map(|&c| c == Cell::Wall).collect();
    let weights: Vec<(usize, f64)> = mem
        .atoms()
        .iter()
        .map(|a| {
            let cell = a
                .position
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(y.1))
                .map_or(0, |(i, _)| i);
            (cell, a.count)
        })
        .collect();
    Ok(svg::maze_overlay(
        &format!("atoms on maze, seed {seed}"),
        maze.size(),
        &walls,
        &weights,
    ))
}
