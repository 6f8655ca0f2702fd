use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recode_core::{
    spawn_actors, Actor, Atom, MemoryService, RecodeConfig, RecodeMemory, RemovalStrategy, RewardNormalizer,
    SchedulingMode,
};

use super::{ok_str, Verdict};
use crate::checks::{monotonicity_probe, relative_error, removal_check, removal_weights_match, telescoped_total};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{RunDir, Table};

/// Uniform-step random walk in `dim` dimensions; deterministic per seed.
#[derive(Debug, Clone)]
pub struct Walker {
    rng: ChaCha8Rng,
    pos: Vec<f64>,
    left: u64,
}

impl Walker {
    pub fn new(seed: u64, actor: usize, dim: usize, steps: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(actor as u64 + 1);
        Self {
            rng,
            pos: vec![0.0; dim],
            left: steps,
        }
    }
}

impl Actor for Walker {
    fn next_embedding(&mut self) -> Option<Vec<f64>> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        for p in &mut self.pos {
            *p += self.rng.random::<f64>() - 0.5;
        }
        Some(self.pos.clone())
    }
}

fn service(cfg: RecodeConfig, dim: usize) -> Result<MemoryService> {
    Ok(MemoryService::new(RecodeMemory::new(cfg, dim)?, RewardNormalizer::default()))
}

pub(super) fn run(config: &ExperimentConfig, out: &mut RunDir) -> Result<Verdict> {
    let p = config.concurrency_check.as_ref().expect("validated");
    let mut table = Table::new(&["seed", "mode", "actors", "submissions", "check", "passed"]);
    let mut lines = Vec::new();
    let mut passed = true;
    for &seed in &config.seeds {
        let cfg = config.memory_for(seed);
        let walkers = |n: usize| (0..n).map(|i| Walker::new(seed, i, p.dim, p.submissions_per_actor)).collect();

        // round robin against sequential replay
        let svc = service(cfg.clone(), p.dim)?;
        let (stats, _) = spawn_actors(&svc, walkers(p.actors), SchedulingMode::DeterministicRoundRobin)?;
        let mut replay = RecodeMemory::new(cfg.clone(), p.dim)?;
        let mut norm = RewardNormalizer::default();
        let mut sources: Vec<Walker> = walkers(p.actors);
        for _ in 0..p.submissions_per_actor {
            for w in &mut sources {
                let e = w.next_embedding().expect("equal lengths");
                norm.normalize(replay.process(&e)?);
            }
        }
        let identical = svc.snapshot() == replay.to_snapshot();
        let expected = p.submissions_per_actor * p.actors as u64;
        let counted = svc.submissions() == expected && stats.total == expected;
        let (_, svc_norm) = svc.into_inner();
        let same_norm = svc_norm == norm;
        let rr = [
            ("snapshot_matches_replay", identical),
            ("normalizer_matches_replay", same_norm),
            ("submission_count", counted),
        ];
        for (check, ok) in rr {
            table.push(vec![
                seed.to_string(),
                "round_robin".into(),
                p.actors.to_string(),
                expected.to_string(),
                check.into(),
                ok.to_string(),
            ]);
            passed &= ok;
        }
        lines.push(format!(
            "seed {seed}: round robin {} actors x {} submissions, snapshot identical to replay: {identical}, counter {} [{}]",
            p.actors,
            p.submissions_per_actor,
            expected,
            ok_str(identical && same_norm && counted)
        ));

        // free running: invariants on whatever order the threads produced
        let svc = service(cfg.clone(), p.dim)?;
        let (stats, _) = spawn_actors(&svc, walkers(p.free_running_actors), SchedulingMode::FreeRunning)?;
        let total = p.submissions_per_actor * p.free_running_actors as u64;
        let (mem, _) = svc.into_inner();
        let err = relative_error(mem.total_count(), telescoped_total(cfg.gamma, total));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut violations = 0;
        for _ in 0..p.probes {
            let a = &mem.atoms()[rng.random_range(0..mem.len())];
            let e: Vec<f64> = a.position.iter().map(|x| x + 0.1 * (rng.random::<f64>() - 0.5)).collect();
            if monotonicity_probe(&mem, &e)? == Some(false) {
                violations += 1;
            }
        }
        let mut removal_ok = true;
        for removal in RemovalStrategy::ALL {
            let atoms: Vec<Atom> = mem.atoms().to_vec();
            let probe = RecodeMemory::from_parts(
                RecodeConfig { removal, ..cfg.clone() },
                p.dim,
                atoms,
                mem.d_ema_sq(),
                mem.steps_processed(),
            )?;
            // the state itself is random here, so the sampling test only
            // guards against gross errors
            removal_ok &= removal_weights_match(&probe) && removal_check(&probe, p.removal_draws)?.passed(1e-4);
        }
        let fr = [
            ("no_lost_updates", stats.total == total && mem.steps_processed() == total),
            ("count_conservation", err <= p.conservation_tol),
            ("capacity_bound", mem.len() <= cfg.capacity),
            ("assimilation_monotone", violations == 0),
            ("removal_distribution", removal_ok),
        ];
        let mut fr_ok = true;
        for (check, ok) in fr {
            table.push(vec![
                seed.to_string(),
                "free_running".into(),
                p.free_running_actors.to_string(),
                total.to_string(),
                check.into(),
                ok.to_string(),
            ]);
            fr_ok &= ok;
        }
        passed &= fr_ok;
        lines.push(format!(
            "seed {seed}: free running {} actors, conservation rel err {err:.2e}, {violations} monotonicity violations, removal ok {removal_ok} [{}]",
            p.free_running_actors,
            ok_str(fr_ok)
        ));
    }
    out.table("checks.csv", &table);
    Ok(Verdict { passed, lines })
}
