use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recode_core::embeddings::one_hot_embed;
use recode_core::env::{Action, Environment, GridWorld, RenderMode};
use recode_core::RecodeMemory;

use super::{ok_str, Verdict};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, RunDir, Table};

/// Reward a count-exact memory must give on a visit preceded by `prior`
/// visits to the same state.
pub fn exact_reward(prior: u64, n0: f64) -> f64 {
    if prior == 0 {
        1.0 / n0
    } else {
        1.0 / (((prior + 1) as f64).sqrt() + n0)
    }
}

pub(super) fn run(config: &ExperimentConfig, out: &mut RunDir) -> Result<Verdict> {
    let params = config.tabular_oracle.as_ref().expect("validated");
    let n = params.size;
    let states = n * n;
    let mut lines = Vec::new();
    let mut passed = true;
    for &seed in &config.seeds {
        let cfg = config.memory_for(seed);
        let n0 = cfg.n0;
        let mut mem = RecodeMemory::new(cfg, states)?;
        let mut env = GridWorld::new(n, params.start, None, RenderMode::PositionOnly)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut visits: HashMap<usize, u64> = HashMap::new();
        let mut trace = Table::new(&["step", "state", "prior_visits", "reward", "expected", "match"]);
        let mut first_bad = None;
        let mut mismatches = 0u64;
        env.reset();
        for step in 0..params.steps {
            if step > 0 {
                env.step(Action::ALL[rng.random_range(0..4)])?;
            }
            let s = env.state_index();
            let prior = visits.get(&s).copied().unwrap_or(0);
            let reward = mem.process(&one_hot_embed(s, states)?)?;
            let expected = exact_reward(prior, n0);
            let ok = reward == expected;
            if !ok {
                mismatches += 1;
                first_bad.get_or_insert(format!(
                    "step {step} state {s}: reward {reward} expected {expected} after {prior} visits"
                ));
            }
            trace.push(vec![
                step.to_string(),
                s.to_string(),
                prior.to_string(),
                num(reward),
                num(expected),
                ok.to_string(),
            ]);
            *visits.entry(s).or_default() += 1;
        }
        let mut counts = Table::new(&["state", "visits", "atom_count", "match"]);
        let mut atom_of: HashMap<usize, f64> = HashMap::new();
        for a in mem.atoms() {
            let s = a.position.iter().position(|&x| x == 1.0).unwrap_or(usize::MAX);
            *atom_of.entry(s).or_default() += a.count;
        }
        for s in 0..states {
            let v = visits.get(&s).copied().unwrap_or(0);
            let c = atom_of.get(&s).copied().unwrap_or(0.0);
            let ok = c == v as f64;
            if !ok {
                mismatches += 1;
                first_bad.get_or_insert(format!("final count for state {s}: atom {c} vs {v} visits"));
            }
            counts.push(vec![s.to_string(), v.to_string(), num(c), ok.to_string()]);
        }
        if atom_of.len() != visits.len() {
            mismatches += 1;
            first_bad.get_or_insert(format!("{} atoms for {} visited states", atom_of.len(), visits.len()));
        }
        let ok = mismatches == 0;
        passed &= ok;
        lines.push(format!(
            "seed {seed}: {} steps, {mismatches} mismatches{} [{}]",
            params.steps,
            first_bad.map(|f| format!(", first divergence at {f}")).unwrap_or_default(),
            ok_str(ok)
        ));
        out.table(&format!("trace_seed{seed}.csv"), &trace);
        out.table(&format!("counts_seed{seed}.csv"), &counts);
    }
    Ok(Verdict { passed, lines })
}
