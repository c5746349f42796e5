//! Output directory bookkeeping: every file goes through one writer that
//! hashes it, and the manifest is written last.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub files: Vec<FileEntry>,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub parallel_feature: bool,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub warnings: Vec<String>,
    /// Wall-clock seconds per phase. The only field that varies between
    /// identical runs.
    pub timings: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
    timings: BTreeMap<String, f64>,
    warnings: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings: BTreeMap::new(),
            warnings: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes via a temporary file and a rename so readers never see half a
    /// file.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        if self.files.iter().any(|f| f.path == name) {
            return Err(CliError::Io(format!("{name} written twice")));
        }
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        self.write_bytes(name, text.as_bytes())
    }

    pub fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timings.entry(label.to_string()).or_default() += start.elapsed().as_secs_f64();
        out
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let m = message.into();
        log::warn!("{m}");
        self.warnings.push(m);
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn finish(self, info: RunInfo) -> CliResult<Manifest> {
        let mut versions = BTreeMap::new();
        versions.insert("cavity-rotor", env!("CARGO_PKG_VERSION"));
        versions.insert("rotor-core", rotor_core::VERSION);
        let manifest = Manifest {
            command: info.command,
            files: self.files,
            config_sha256: info.config_sha256,
            seed: info.seed,
            workers: info.workers,
            parallel_feature: rotor_core::PARALLEL,
            versions,
            warnings: self.warnings,
            timings: self.timings,
        };
        let mut text =
            serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.dir.join(MANIFEST), text.as_bytes())?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunInfo {
    pub command: String,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("cannot move {} into place: {e}", path.display())))
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Formats rows of numbers as CSV.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| num(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// One value per line, no header.
pub fn column(values: &[f64]) -> String {
    values.iter().map(|v| num(*v) + "\n").collect()
}
