//! Run directories: CSV tables, SVG files and the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// One CSV file: a header row, then records.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let csv_err = |source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(String::from).collect());
        }
        Ok(Self { header, rows })
    }
}

/// Formats a float so that parsing it back gives the same bits.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    version: &'static str,
    config_sha256: String,
    seeds: &'a [u64],
    passed: bool,
    files: Vec<FileEntry>,
    config: &'a ExperimentConfig,
}

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

/// Collects files for one run and writes them under `dir`.
#[derive(Debug)]
pub struct RunDir {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl RunDir {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn table(&mut self, name: &str, table: &Table) {
        self.files.push((name.to_string(), table.to_csv().into_bytes()));
    }

    pub fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file plus `manifest.toml`; returns the written paths.
    pub fn finish(self, config: &ExperimentConfig, seeds: &[u64], passed: bool) -> Result<Vec<PathBuf>> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let mut written = Vec::new();
        let mut entries = Vec::new();
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, bytes).map_err(io(&path))?;
            entries.push(FileEntry {
                path: name.clone(),
                sha256: hex::encode(Sha256::digest(bytes)),
            });
            written.push(path);
        }
        let manifest = Manifest {
            experiment: config.experiment.name(),
            version: VERSION,
            config_sha256: config.hash(),
            seeds,
            passed,
            files: entries,
            config,
        };
        let path = self.dir.join("manifest.toml");
        let body = toml::to_string(&manifest).expect("manifest serialises");
        fs::write(&path, body).map_err(io(&path))?;
        written.push(path);
        Ok(written)
    }
}

/// `v<crate version>-g<commit>`; the commit reads `unknown` outside git.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"), "-g", env!("RECODE_GIT_COMMIT"));
