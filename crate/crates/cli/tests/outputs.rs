use std::fs;
use std::path::Path;
use std::process::Command;

use recode_cli::output::Table;
use recode_cli::{run, ExperimentConfig};

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

/// Summed count per cell of a 4×4 grid on [0, 100]², then std/mean.
fn count_cv(rows: &[(f64, f64, f64)]) -> f64 {
    let mut grid = [[0.0f64; 4]; 4];
    for &(x, y, c) in rows {
        let ix = ((x / 25.0) as usize).min(3);
        let iy = ((y / 25.0) as usize).min(3);
        grid[iy][ix] += c;
    }
    let cells: Vec<f64> = grid.iter().flatten().copied().collect();
    let mean = cells.iter().sum::<f64>() / 16.0;
    let var = cells.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / 16.0;
    var.sqrt() / mean
}

#[test]
fn removal_metrics_recompute_from_atom_files() {
    let mut cfg = ExperimentConfig::load(&configs().join("removal_ablation.toml")).unwrap();
    let params = cfg.removal_ablation.as_ref().unwrap();
    assert_eq!((params.bins, params.extent), (4, 100.0));
    cfg.seeds = vec![0, 1];
    let dir = tempfile::tempdir().unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    run(&cfg).unwrap();

    let metrics = Table::read(&dir.path().join("metrics.csv")).unwrap();
    let col = |n: &str| metrics.column(n).unwrap();
    assert_eq!(metrics.rows.len(), 6);
    for row in &metrics.rows {
        let atoms = Table::read(&dir.path().join(format!("atoms_{}_seed{}.csv", row[col("strategy")], row[col("seed")]))).unwrap();
        let (x, y, c) = (atoms.column("x").unwrap(), atoms.column("y").unwrap(), atoms.column("count").unwrap());
        let points: Vec<_> = atoms.rows.iter().map(|r| (f(&r[x]), f(&r[y]), f(&r[c]))).collect();
        assert_eq!(points.len().to_string(), row[col("atoms")]);
        let total: f64 = points.iter().map(|p| p.2).sum();
        assert!((total - f(&row[col("total_count")])).abs() <= 1e-9 * total);
        let cv = count_cv(&points);
        assert!((cv - f(&row[col("count_cv")])).abs() < 1e-9, "{cv} vs {}", row[col("count_cv")]);
    }
}

#[test]
fn manifest_hashes_match_written_files() {
    let mut cfg = ExperimentConfig::load(&configs().join("tabular_oracle.toml")).unwrap();
    cfg.seeds = vec![7];
    let dir = tempfile::tempdir().unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    let outcome = run(&cfg).unwrap();
    let manifest: toml::Table = fs::read_to_string(dir.path().join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap(), cfg.hash());
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len() + 1, outcome.files.len());
    for entry in files {
        let name = entry["path"].as_str().unwrap();
        let bytes = fs::read(dir.path().join(name)).unwrap();
        let digest = <sha2::Sha256 as sha2::Digest>::digest(&bytes);
        assert_eq!(entry["sha256"].as_str().unwrap(), hex::encode(digest));
    }
}

fn recode(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_recode")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_runs_a_single_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("tabular_oracle.toml");
    let (code, stdout, _) = recode(&[
        "tabular-oracle",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "11",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("seed 11:"));
    assert!(stdout.ends_with("tabular-oracle: PASS\n"));
    assert!(dir.path().join("trace_seed11.csv").exists());
}

#[test]
fn cli_rejects_mismatched_subcommand() {
    let config = configs().join("grad_check.toml");
    let (code, _, stderr) = recode(&["toy-density", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("grad-check"), "{stderr}");
}

#[test]
fn cli_reports_unknown_key_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = fs::read_to_string(configs().join("tabular_oracle.toml")).unwrap();
    fs::write(&path, text.replace("steps = 10000", "steps = 10000\nstepz = 3")).unwrap();
    let (code, _, stderr) = recode(&["tabular-oracle", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    let line = text.lines().position(|l| l == "steps = 10000").unwrap() + 2;
    assert!(stderr.contains("stepz"), "{stderr}");
    assert!(stderr.contains(&format!("bad.toml:{line}")), "{stderr}");
}
