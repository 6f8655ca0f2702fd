//! Randomised invariant sweeps over the memory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recode_core::{Atom, Branch, RecodeConfig, RecodeMemory, RemovalStrategy};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::Result;

/// `sum_{i=1..m} gamma^(m-i)` in closed form.
pub fn telescoped_total(gamma: f64, m: u64) -> f64 {
    if gamma == 1.0 {
        m as f64
    } else {
        (1.0 - gamma.powf(m as f64)) / (1.0 - gamma)
    }
}

pub fn relative_error(actual: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        actual.abs()
    } else {
        ((actual - expected) / expected).abs()
    }
}

fn random_config<R: Rng>(rng: &mut R) -> RecodeConfig {
    let removal = RemovalStrategy::ALL[rng.random_range(0..3)];
    RecodeConfig {
        capacity: rng.random_range(2..=200),
        k: rng.random_range(1..=20),
        kappa: rng.random_range(0.01..1.0),
        tau: [0.5, 0.9, 0.99, 0.9999][rng.random_range(0..4)],
        gamma: [0.99, 0.999, 1.0][rng.random_range(0..3)],
        eta: rng.random_range(0.01..=1.0),
        removal,
        seed: rng.random(),
        ..RecodeConfig::default()
    }
}

/// Point cloud around a few random centres, with exact repeats mixed in.
fn random_embedding<R: Rng>(rng: &mut R, centres: &[Vec<f64>], scale: f64) -> Vec<f64> {
    let c = &centres[rng.random_range(0..centres.len())];
    if rng.random::<f64>() < 0.1 {
        return c.clone();
    }
    c.iter().map(|x| x + scale * (rng.random::<f64>() - 0.5)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub calls: u64,
    pub runs: u64,
    pub max_rel_err: f64,
}

/// Fresh memories with random configs process random streams until `calls`
/// embeddings are spent; after every run the total count is compared to
/// the telescoped discount sum.
pub fn conservation_sweep(calls: u64, seed: u64) -> Result<ConservationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ConservationReport {
        calls: 0,
        runs: 0,
        max_rel_err: 0.0,
    };
    while report.calls < calls {
        let cfg = random_config(&mut rng);
        let gamma = cfg.gamma;
        let dim = rng.random_range(1..=6);
        let len = rng.random_range(500..=5000).min(calls - report.calls);
        let centres: Vec<Vec<f64>> = (0..rng.random_range(1..=8))
            .map(|_| (0..dim).map(|_| 10.0 * rng.random::<f64>()).collect())
            .collect();
        let scale = [0.01, 1.0, 10.0][rng.random_range(0..3)];
        let mut mem = RecodeMemory::new(cfg, dim)?;
        for _ in 0..len {
            mem.process(&random_embedding(&mut rng, &centres, scale))?;
        }
        let err = relative_error(mem.total_count(), telescoped_total(gamma, len));
        report.max_rel_err = report.max_rel_err.max(err);
        report.calls += len;
        report.runs += 1;
    }
    Ok(report)
}

/// Processes `e` on a copy of `mem`. Returns `None` if the step inserted,
/// else whether the soft count at `e` under the post-update bandwidth held
/// or grew across the assimilation.
pub fn monotonicity_probe(mem: &RecodeMemory, e: &[f64]) -> Result<Option<bool>> {
    let mut before = mem.clone();
    before.update_bandwidth(e)?;
    before.discount_counts();
    let ahead = before.soft_visitation_count(e)?;
    let mut after = mem.clone();
    let trace = after.process_traced(e)?;
    match trace.branch {
        Branch::Inserted { .. } => Ok(None),
        Branch::Assimilated { .. } => Ok(Some(after.soft_visitation_count(e)? >= ahead)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub states: u64,
    pub assimilations: u64,
    pub violations: u64,
}

/// Random memory states built directly from atoms, each probed with one
/// embedding drawn near an existing atom.
pub fn monotonicity_sweep(states: u64, seed: u64) -> Result<MonotonicityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MonotonicityReport {
        states,
        assimilations: 0,
        violations: 0,
    };
    for _ in 0..states {
        let cfg = random_config(&mut rng);
        let dim = rng.random_range(1..=5);
        let n = rng.random_range(1..=cfg.capacity.min(30));
        let atoms: Vec<Atom> = (0..n)
            .map(|i| Atom {
                position: (0..dim).map(|_| 4.0 * rng.random::<f64>()).collect(),
                count: if rng.random::<f64>() < 0.2 { 0.0 } else { 20.0 * rng.random::<f64>() },
                born: i as u64,
            })
            .collect();
        let d = [0.0, 1e-3, 0.1, 1.0, 10.0][rng.random_range(0..5)];
        let anchor = atoms[rng.random_range(0..n)].position.clone();
        let spread = [0.0, 0.01, 0.3, 2.0][rng.random_range(0..4)];
        let e: Vec<f64> = anchor.iter().map(|x| x + spread * (rng.random::<f64>() - 0.5)).collect();
        let mem = RecodeMemory::from_parts(cfg, dim, atoms, d, n as u64)?;
        if let Some(ok) = monotonicity_probe(&mem, &e)? {
            report.assimilations += 1;
            if !ok {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalReport {
    pub strategy: RemovalStrategy,
    pub draws: usize,
    /// Chi-square p-value for the sampling strategies.
    pub p_value: Option<f64>,
    /// Min-count only: every draw was the lowest-count atom.
    pub always_argmin: Option<bool>,
}

impl RemovalReport {
    pub fn passed(&self, alpha: f64) -> bool {
        self.p_value.is_none_or(|p| p > alpha) && self.always_argmin != Some(false)
    }
}

/// Draws `draws` removals from a copy of `mem` and tests the empirical
/// frequencies against the normalised weights. Cells expecting fewer than
/// five hits are pooled.
pub fn removal_check(mem: &RecodeMemory, draws: usize) -> Result<RemovalReport> {
    let mut probe = mem.clone();
    let strategy = mem.config().removal;
    let mut hits = vec![0u64; mem.len()];
    for _ in 0..draws {
        hits[probe.sample_removal()?] += 1;
    }
    if strategy == RemovalStrategy::MinCount {
        let min = mem.atoms().iter().map(|a| a.count).fold(f64::INFINITY, f64::min);
        let first = mem.atoms().iter().position(|a| a.count == min);
        let ok = hits.iter().enumerate().all(|(i, &h)| h == 0 || Some(i) == first);
        return Ok(RemovalReport {
            strategy,
            draws,
            p_value: None,
            always_argmin: Some(ok),
        });
    }
    let counts: Vec<f64> = mem.atoms().iter().map(|a| a.count).collect();
    let w = expected_removal_weights(&counts, strategy);
    let total: f64 = w.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&h, &wi) in hits.iter().zip(&w) {
        let expected = draws as f64 * wi / total;
        if expected < 5.0 {
            pooled.0 += h as f64;
            pooled.1 += expected;
        } else {
            cells.push((h as f64, expected));
        }
    }
    if pooled.1 > 0.0 {
        cells.push(pooled);
    }
    let p_value = if cells.len() < 2 {
        1.0
    } else {
        let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
        let dist = ChiSquared::new((cells.len() - 1) as f64).expect("positive dof");
        1.0 - dist.cdf(stat)
    };
    Ok(RemovalReport {
        strategy,
        draws,
        p_value: Some(p_value),
        always_argmin: None,
    })
}

/// Removal weights recomputed from counts alone.
pub fn expected_removal_weights(counts: &[f64], strategy: RemovalStrategy) -> Vec<f64> {
    let floor = |c: f64| c.max(1e-6);
    match strategy {
        RemovalStrategy::InverseCountSquared => counts.iter().map(|&c| 1.0 / (floor(c) * floor(c))).collect(),
        RemovalStrategy::InverseCount => counts.iter().map(|&c| 1.0 / floor(c)).collect(),
        RemovalStrategy::MinCount => {
            let min = counts.iter().copied().fold(f64::INFINITY, f64::min);
            let first = counts.iter().position(|&c| c == min);
            (0..counts.len()).map(|i| if Some(i) == first { 1.0 } else { 0.0 }).collect()
        }
    }
}

/// Whether the memory reports exactly the recomputed removal weights.
pub fn removal_weights_match(mem: &RecodeMemory) -> bool {
    let counts: Vec<f64> = mem.atoms().iter().map(|a| a.count).collect();
    mem.removal_weights() == expected_removal_weights(&counts, mem.config().removal)
}

/// [`removal_check`] for every strategy on one random full memory.
pub fn removal_sweep(draws: usize, seed: u64) -> Result<Vec<RemovalReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms: Vec<Atom> = (0..12)
        .map(|i| Atom {
            position: vec![i as f64],
            count: 0.25 + 4.0 * rng.random::<f64>(),
            born: 0,
        })
        .collect();
    RemovalStrategy::ALL
        .into_iter()
        .map(|removal| {
            let cfg = RecodeConfig {
                capacity: atoms.len(),
                removal,
                seed,
                ..RecodeConfig::default()
            };
            removal_check(&RecodeMemory::from_parts(cfg, 1, atoms.clone(), 1.0, 0)?, draws)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescoped_matches_loop() {
        for gamma in [0.5, 0.99, 1.0] {
            let mut acc = 0.0;
            for m in 1..=200u64 {
                acc = gamma * acc + 1.0;
                assert!(relative_error(telescoped_total(gamma, m), acc) < 1e-12);
            }
        }
    }

    #[test]
    fn small_sweeps_pass() {
        assert!(conservation_sweep(5_000, 1).unwrap().max_rel_err < 1e-9);
        let m = monotonicity_sweep(500, 2).unwrap();
        assert_eq!(m.violations, 0);
        assert!(m.assimilations > 50, "{m:?}");
        for r in removal_sweep(20_000, 3).unwrap() {
            assert!(r.passed(0.001), "{r:?}");
        }
    }

    #[test]
    fn chi_square_catches_wrong_weights() {
        // a sampler biased toward index 0 must fail against 1/c weights
        let atoms: Vec<Atom> = (0..4)
            .map(|i| Atom {
                position: vec![i as f64],
                count: 1.0,
                born: 0,
            })
            .collect();
        let cfg = RecodeConfig {
            capacity: 4,
            removal: RemovalStrategy::InverseCount,
            ..RecodeConfig::default()
        };
        let fair = RecodeMemory::from_parts(cfg.clone(), 1, atoms.clone(), 1.0, 0).unwrap();
        assert!(removal_check(&fair, 20_000).unwrap().passed(0.01));
        let mut skew = atoms;
        skew[0].count = 0.5;
        let skewed = RecodeMemory::from_parts(cfg, 1, skew, 1.0, 0).unwrap();
        // sample the skewed memory, test against the fair weights
        let mut probe = skewed.clone();
        let mut hits = [0u64; 4];
        for _ in 0..20_000 {
            hits[probe.sample_removal().unwrap()] += 1;
        }
        let stat: f64 = hits.iter().map(|&h| (h as f64 - 5000.0).powi(2) / 5000.0).sum();
        let p = 1.0 - ChiSquared::new(3.0).unwrap().cdf(stat);
        assert!(p < 1e-6);
    }
}
