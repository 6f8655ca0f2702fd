use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recode_core::env::expanding_square_batch;
use recode_core::{Atom, RecodeConfig, RecodeMemory};

use super::{atom_table, ok_str, Verdict};
use crate::checks::{relative_error, telescoped_total};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, RunDir, Table};
use crate::svg;

/// Share of total count held by atoms inside `[0, corner]²`.
pub fn quadrant_share(atoms: &[Atom], corner: f64) -> f64 {
    let total: f64 = atoms.iter().map(|a| a.count).sum();
    let inside: f64 = atoms
        .iter()
        .filter(|a| a.position.iter().all(|&x| x <= corner))
        .map(|a| a.count)
        .sum();
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

pub(super) fn run(config: &ExperimentConfig, out: &mut RunDir) -> Result<Verdict> {
    let params = config.toy_density.as_ref().expect("validated");
    let stream = config.stream.expect("validated");
    let lo = params.gammas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = params.gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut summary = Table::new(&[
        "seed",
        "gamma",
        "atoms",
        "total_count",
        "expected_total",
        "conservation_rel_err",
        "bottom_left_share",
    ]);
    let mut passed = true;
    let mut lines = Vec::new();
    for &seed in &config.seeds {
        let mut shares = Vec::new();
        for &gamma in &params.gammas {
            let cfg = RecodeConfig {
                gamma,
                ..config.memory_for(seed)
            };
            let mut mem = RecodeMemory::new(cfg, 2)?;
            // same points for every discount
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut calls = 0u64;
            for t in 0..=stream.horizon {
                for p in expanding_square_batch(t, &stream, &mut rng) {
                    mem.process(&p)?;
                    calls += 1;
                }
            }
            let expected = telescoped_total(gamma, calls);
            let err = relative_error(mem.total_count(), expected);
            let share = quadrant_share(mem.atoms(), params.quadrant);
            passed &= err <= params.conservation_tol;
            shares.push((gamma, share));
            summary.push(vec![
                seed.to_string(),
                num(gamma),
                mem.len().to_string(),
                num(mem.total_count()),
                num(expected),
                num(err),
                num(share),
            ]);
            let stem = format!("atoms_gamma{gamma}_seed{seed}");
            out.table(&format!("{stem}.csv"), &atom_table(mem.atoms()));
            let points: Vec<_> = mem.atoms().iter().map(|a| (a.position[0], a.position[1], a.count)).collect();
            out.text(
                &format!("{stem}.svg"),
                svg::scatter(
                    &format!("atoms, gamma {gamma}, seed {seed}"),
                    &points,
                    (0.0, stream.side(stream.horizon)),
                ),
            );
        }
        let share_of = |g: f64| shares.iter().find(|s| s.0 == g).map_or(0.0, |s| s.1);
        let ok = share_of(hi) > share_of(lo);
        passed &= ok;
        lines.push(format!(
            "seed {seed}: bottom-left share gamma {hi} = {:.4}, gamma {lo} = {:.4} [{}]",
            share_of(hi),
            share_of(lo),
            ok_str(ok)
        ));
    }
    out.table("summary.csv", &summary);
    Ok(Verdict { passed, lines })
}
