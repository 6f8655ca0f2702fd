use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recode_core::embeddings::{one_hot_embed, ApConfig, ApModel, GradCheck, Transition};
use recode_core::env::{Action, Environment, GridWorld, RenderMode};

use super::{ok_str, Verdict};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, RunDir, Table};

/// Random-walk transitions on a square open grid with one-hot observations;
/// bumps into the boundary are skipped.
pub fn gridworld_transitions(size: usize, len: usize, seed: u64) -> Result<Vec<Transition>> {
    let states = size * size;
    let mut env = GridWorld::new(size, (size / 2, size / 2), None, RenderMode::PositionOnly)?;
    env.reset();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = Vec::with_capacity(len);
    while batch.len() < len {
        let before = env.state_index();
        let action = rng.random_range(0..4);
        env.step(Action::ALL[action])?;
        let after = env.state_index();
        if before != after {
            batch.push(Transition {
                obs: one_hot_embed(before, states)?,
                action,
                next_obs: one_hot_embed(after, states)?,
            });
        }
    }
    Ok(batch)
}

pub(super) fn run(config: &ExperimentConfig, out: &mut RunDir) -> Result<Verdict> {
    let params = config.grad_check.as_ref().expect("validated");
    let side = (params.model.obs_dim as f64).sqrt().round() as usize;
    let mut table = Table::new(&["seed", "check", "block", "max_rel_err"]);
    let mut lines = Vec::new();
    let mut passed = true;
    for &seed in &config.seeds {
        let batch = gridworld_transitions(side, params.batch_size, seed)?;
        let mut model = ApModel::new(ApConfig {
            seed,
            ..params.model.clone()
        })?;
        for _ in 0..params.warmup_steps {
            model.train_step(&batch)?;
        }
        let clean = GradCheck {
            samples: params.samples,
            seed,
            ..GradCheck::default()
        };
        let corrupt = GradCheck {
            corrupt: Some((params.corrupt_block, params.corrupt_factor)),
            ..clean.clone()
        };
        let good = clean.run(&model, &batch)?;
        let bad = corrupt.run(&model, &batch)?;
        for (name, report) in [("clean", &good), ("corrupted", &bad)] {
            for (block, err) in &report.per_block {
                table.push(vec![seed.to_string(), name.into(), block.name().into(), num(*err)]);
            }
        }
        let ok = good.checked >= 200 && good.max_rel_err < params.threshold && bad.max_rel_err > params.threshold;
        passed &= ok;
        lines.push(format!(
            "seed {seed}: {} parameters, max rel err {:.3e}; corrupted {} x{} gives {:.3e} [{}]",
            good.checked,
            good.max_rel_err,
            params.corrupt_block.name(),
            params.corrupt_factor,
            bad.max_rel_err,
            ok_str(ok)
        ));
    }
    out.table("grad_check.csv", &table);
    Ok(Verdict { passed, lines })
}
