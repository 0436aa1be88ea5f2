//! Run manifests: a plain-text record of what a command produced.
//!
//! Every CLI run writes `manifest.txt` into the output directory. The manifest
//! pins the command, the SHA-256 of the canonical configuration, the base seed
//! and every derived stream seed, wall-clock timings, and the name, SHA-256,
//! and byte length of each output file. Two runs of the same command with the
//! same configuration and seed produce byte-identical data files and identical
//! `file.*` manifest lines; only the `timing.*` lines vary.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;

/// Hex-encoded SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// One output file: name (relative to the output directory), content hash,
/// and size in bytes.
#[derive(Debug, Clone)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Accumulates everything the manifest reports while a command runs.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub derived_seeds: Vec<(String, u64)>,
    pub timings_ms: Vec<(String, u128)>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new(command: &str, canonical_config: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_sha256: sha256_hex(canonical_config.as_bytes()),
            seed,
            derived_seeds: Vec::new(),
            timings_ms: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Records a file that has been (or is about to be) written with exactly
    /// these bytes.
    pub fn record_file(&mut self, name: &str, contents: &[u8]) {
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len(),
        });
    }

    pub fn record_seed(&mut self, label: &str, seed: u64) {
        self.derived_seeds.push((label.to_string(), seed));
    }

    pub fn record_timing(&mut self, label: &str, ms: u128) {
        self.timings_ms.push((label.to_string(), ms));
    }

    /// Renders the manifest text. File entries are sorted by name so the
    /// listing order never depends on execution order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "manifest.version = 1");
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "config.sha256 = {}", self.config_sha256);
        let _ = writeln!(s, "seed = {}", self.seed);
        for (label, seed) in &self.derived_seeds {
            let _ = writeln!(s, "seed.{label} = {seed}");
        }
        for (label, ms) in &self.timings_ms {
            let _ = writeln!(s, "timing.{label}.ms = {ms}");
        }
        let mut files = self.files.clone();
        files.sort_by(|a, b| a.name.cmp(&b.name));
        for f in files {
            let _ = writeln!(s, "file.{}.sha256 = {}", f.name, f.sha256);
            let _ = writeln!(s, "file.{}.bytes = {}", f.name, f.bytes);
        }
        s
    }
}
