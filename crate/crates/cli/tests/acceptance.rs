//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line; run with `--nocapture` to see them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use recode_cli::checks::{conservation_sweep, monotonicity_sweep, removal_sweep};
use recode_cli::{run, ExperimentConfig, Outcome};
use recode_core::RemovalStrategy;

fn config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"));
    ExperimentConfig::load(&path).expect("frozen config loads")
}

fn run_in(mut cfg: ExperimentConfig, dir: &Path) -> (Outcome, Duration) {
    cfg.out_dir = dir.to_path_buf();
    let start = Instant::now();
    let outcome = run(&cfg).expect("experiment runs");
    (outcome, start.elapsed())
}

fn report(n: u32, passed: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if passed { "PASS" } else { "FAIL" });
}

/// Runs a frozen experiment under a time limit and reports it.
fn experiment(n: u32, name: &str, limit: Option<Duration>) {
    let dir = tempfile::tempdir().unwrap();
    let (outcome, took) = run_in(config(name), dir.path());
    for line in &outcome.lines {
        println!("  {line}");
    }
    let in_time = limit.is_none_or(|l| took < l);
    let ok = outcome.passed && in_time;
    report(n, ok, &format!("{name} in {:.2}s", took.as_secs_f64()));
    assert!(outcome.passed, "{name} failed");
    assert!(in_time, "{name} took {took:?}, limit {limit:?}");
}

#[test]
fn criterion_01_tabular_oracle() {
    experiment(1, "tabular_oracle", Some(Duration::from_secs(10)));
}

#[test]
fn criterion_02_count_conservation() {
    let start = Instant::now();
    let r = conservation_sweep(100_000, 2024).unwrap();
    let took = start.elapsed();
    let ok = r.calls == 100_000 && r.max_rel_err <= 1e-6 && took < Duration::from_secs(30);
    report(
        2,
        ok,
        &format!("{} calls over {} runs, max rel err {:.2e}, {:.2}s", r.calls, r.runs, r.max_rel_err, took.as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn criterion_03_assimilation_monotonicity() {
    let r = monotonicity_sweep(10_000, 2024).unwrap();
    let ok = r.states == 10_000 && r.violations == 0 && r.assimilations > 0;
    report(
        3,
        ok,
        &format!("{} states, {} assimilations, {} violations", r.states, r.assimilations, r.violations),
    );
    assert!(ok);
}

#[test]
fn criterion_04_removal_distribution() {
    let reports = removal_sweep(100_000, 2024).unwrap();
    let mut ok = reports.len() == 3;
    let mut parts = Vec::new();
    for r in &reports {
        ok &= r.draws == 100_000 && r.passed(0.01);
        match r.strategy {
            RemovalStrategy::MinCount => parts.push(format!("min_count argmin {:?}", r.always_argmin)),
            s => parts.push(format!("{s:?} p={:.3}", r.p_value.unwrap_or(f64::NAN))),
        }
    }
    report(4, ok, &parts.join(", "));
    assert!(ok);
}

#[test]
fn criterion_05_discount_toy() {
    experiment(5, "toy_density", Some(Duration::from_secs(60)));
}

#[test]
fn criterion_06_removal_toy() {
    experiment(6, "removal_ablation", Some(Duration::from_secs(120)));
}

#[test]
fn criterion_07_disco_maze() {
    experiment(7, "disco_maze", Some(Duration::from_secs(600)));
}

#[test]
fn criterion_08_cluster_ages() {
    let cfg = config("cluster_ages");
    let params = cfg.cluster_ages.as_ref().unwrap();
    assert!(params.episodes >= 100);
    assert_eq!(cfg.memory.gamma, 0.999);
    experiment(8, "cluster_ages", None);
}

#[test]
fn criterion_09_gradient_check() {
    experiment(9, "grad_check", None);
}

#[test]
fn criterion_10_concurrency() {
    let cfg = config("concurrency_check");
    let params = cfg.concurrency_check.as_ref().unwrap();
    assert_eq!(params.actors, 4);
    assert!(params.actors as u64 * params.submissions_per_actor as u64 >= 10_000);
    experiment(10, "concurrency_check", None);
}

fn csv_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
        }
    }
    out
}

#[test]
fn criterion_11_rerun_determinism() {
    let names = [
        "tabular_oracle",
        "toy_density",
        "removal_ablation",
        "disco_maze",
        "cluster_ages",
        "grad_check",
        "concurrency_check",
    ];
    let mut ok = true;
    let mut files = 0;
    for name in names {
        let mut cfg = config(name);
        cfg.seeds.truncate(2);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_in(cfg.clone(), a.path());
        run_in(cfg, b.path());
        let (x, y) = (csv_bytes(a.path()), csv_bytes(b.path()));
        let same = !x.is_empty() && x == y;
        if !same {
            println!("  {name}: CSV outputs differ");
        }
        ok &= same;
        files += x.len();
    }
    report(11, ok, &format!("{files} CSV files identical across reruns of {} experiments", names.len()));
    assert!(ok);
}
