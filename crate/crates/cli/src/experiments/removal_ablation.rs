use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recode_core::env::expanding_square_batch;
use recode_core::{RecodeConfig, RecodeMemory, RemovalStrategy};

use super::{atom_table, ok_str, Verdict};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, RunDir, Table};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinCvs {
    /// Coefficient of variation of summed counts per bin.
    pub count_cv: f64,
    /// Coefficient of variation of atom numbers per bin.
    pub density_cv: f64,
}

fn cv(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Population CVs over a `bins × bins` grid on `[0, extent]²`. Points on
/// the far edge fall in the last bin.
pub fn bin_cvs(points: &[(f64, f64, f64)], bins: usize, extent: f64) -> BinCvs {
    let cell = |v: f64| ((v / extent * bins as f64).floor().max(0.0) as usize).min(bins - 1);
    let mut counts = vec![0.0; bins * bins];
    let mut atoms = vec![0.0; bins * bins];
    for &(x, y, c) in points {
        let i = cell(y) * bins + cell(x);
        counts[i] += c;
        atoms[i] += 1.0;
    }
    BinCvs {
        count_cv: cv(&counts),
        density_cv: cv(&atoms),
    }
}

pub(super) fn run(config: &ExperimentConfig, out: &mut RunDir) -> Result<Verdict> {
    let params = config.removal_ablation.as_ref().expect("validated");
    let stream = config.stream.expect("validated");
    let mut metrics = Table::new(&["seed", "strategy", "atoms", "total_count", "count_cv", "density_cv"]);
    let mut lines = Vec::new();
    let mut wins = 0;
    let mut full = true;
    for &seed in &config.seeds {
        let mut by_strategy = Vec::new();
        for &removal in &params.strategies {
            let cfg = RecodeConfig {
                removal,
                ..config.memory_for(seed)
            };
            let capacity = cfg.capacity;
            let mut mem = RecodeMemory::new(cfg, 2)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for t in 0..=stream.horizon {
                for p in expanding_square_batch(t, &stream, &mut rng) {
                    mem.process(&p)?;
                }
            }
            full &= mem.len() == capacity;
            let points: Vec<_> = mem.atoms().iter().map(|a| (a.position[0], a.position[1], a.count)).collect();
            let m = bin_cvs(&points, params.bins, params.extent);
            by_strategy.push((removal, m));
            metrics.push(vec![
                seed.to_string(),
                removal.name().to_string(),
                mem.len().to_string(),
                num(mem.total_count()),
                num(m.count_cv),
                num(m.density_cv),
            ]);
            let stem = format!("atoms_{}_seed{seed}", removal.name());
            out.table(&format!("{stem}.csv"), &atom_table(mem.atoms()));
            out.text(
                &format!("{stem}.svg"),
                svg::scatter(
                    &format!("{}, seed {seed}", removal.name()),
                    &points,
                    (0.0, params.extent),
                ),
            );
        }
        let get = |s: RemovalStrategy| by_strategy.iter().find(|b| b.0 == s).map(|b| b.1);
        if let (Some(sq), Some(min)) = (get(RemovalStrategy::InverseCountSquared), get(RemovalStrategy::MinCount)) {
            let win = sq.count_cv < min.count_cv;
            wins += usize::from(win);
            lines.push(format!(
                "seed {seed}: count-CV inverse_count_squared {:.4} vs min_count {:.4} [{}]",
                sq.count_cv,
                min.count_cv,
                if win { "win" } else { "loss" }
            ));
        }
    }
    let passed = full && wins >= params.min_wins;
    lines.push(format!(
        "inverse-square wins {wins}/{} (need {}), memories full: {full} [{}]",
        config.seeds.len(),
        params.min_wins,
        ok_str(passed)
    ));
    out.table("metrics.csv", &metrics);
    Ok(Verdict { passed, lines })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_has_zero_cv() {
        let pts: Vec<_> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (12.5 + 25.0 * i as f64, 12.5 + 25.0 * j as f64, 2.0)))
            .collect();
        let m = bin_cvs(&pts, 4, 100.0);
        assert_eq!(m.count_cv, 0.0);
        assert_eq!(m.density_cv, 0.0);
    }

    #[test]
    fn single_bin_mass() {
        // one of 16 bins holds everything: sd/mean = sqrt(15)
        let m = bin_cvs(&[(100.0, 100.0, 5.0), (99.0, 80.0, 1.0)], 4, 100.0);
        assert!((m.count_cv - 15f64.sqrt()).abs() < 1e-12);
        assert!((m.density_cv - 15f64.sqrt()).abs() < 1e-12);
    }
}
