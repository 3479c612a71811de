//! Report bundles: deterministic output files plus a hashed manifest.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::AppError;

/// Collects the files of one command run and finishes with a manifest whose
/// hash covers every emitted byte.
pub struct BundleWriter {
    dir: PathBuf,
    command: String,
    seed: u64,
    config_hash: String,
    files: Vec<FileEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    version: String,
    seed: u64,
    config_hash: String,
    files: Vec<FileEntry>,
    bundle_hash: String,
}

impl BundleWriter {
    pub fn create(
        dir: PathBuf,
        command: &str,
        seed: u64,
        effective_config: &impl Serialize,
    ) -> Result<Self, AppError> {
        fs::create_dir_all(&dir)
            .map_err(|e| AppError::validation(format!("cannot create {}: {e}", dir.display())))?;
        let config_text = serde_json::to_string(effective_config)
            .map_err(|e| AppError::validation(format!("config serialization: {e}")))?;
        Ok(Self {
            dir,
            command: command.to_string(),
            seed,
            config_hash: hex::encode(Sha256::digest(config_text.as_bytes())),
            files: Vec::new(),
        })
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), AppError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| AppError::estimation(format!("serialize {name}: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes a CSV with the given header; every row must match its width.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), AppError> {
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), AppError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| AppError::validation(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Writes `manifest.json` and returns the bundle hash.
    pub fn finish(mut self) -> Result<String, AppError> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let mut hasher = Sha256::new();
        hasher.update(self.config_hash.as_bytes());
        for f in &self.files {
            hasher.update(f.name.as_bytes());
            hasher.update(f.sha256.as_bytes());
        }
        let bundle_hash = hex::encode(hasher.finalize());
        let manifest = Manifest {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            files: self.files.clone(),
            bundle_hash: bundle_hash.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| AppError::estimation(format!("manifest: {e}")))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text)
            .map_err(|e| AppError::validation(format!("cannot write manifest: {e}")))?;
        Ok(bundle_hash)
    }
}

/// Fixed-precision float cell for byte-stable CSV output.
pub fn cell(value: f64) -> String {
    if value.is_nan() {
        String::new()
    } else {
        format!("{value:.6}")
    }
}
