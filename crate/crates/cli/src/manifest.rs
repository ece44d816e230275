//! Append-only stage manifest with content-hash idempotency.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub stage: String,
    /// True when the stage was a no-op because inputs and parameters were
    /// unchanged and outputs were intact.
    pub skipped: bool,
    pub started_unix_ms: u64,
    pub wall_ms: u64,
    /// Full parameter snapshot, including declared gap-fill defaults.
    pub params: serde_json::Value,
    pub input_hashes: BTreeMap<String, String>,
    pub output_hashes: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
}

/// The on-disk manifest: one JSON entry per line, append-only.
pub struct Manifest {
    path: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn open(work_dir: &Path) -> Result<Self> {
        let path = work_dir.join("manifest.jsonl");
        let entries = if path.exists() {
            forge_core::jsonl::read_all(&path).context("reading manifest")?
        } else {
            Vec::new()
        };
        Ok(Manifest { path, entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// Latest completed (non-skipped) run of a stage.
    pub fn last_completed(&self, stage: &str) -> Option<&ManifestEntry> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.stage == stage && !e.skipped)
    }

    /// Re-running with identical input hashes and params is a no-op as long
    /// as every recorded output is still on disk with the recorded hash.
    pub fn is_noop(
        &self,
        stage: &str,
        input_hashes: &BTreeMap<String, String>,
        params: &serde_json::Value,
        work_dir: &Path,
    ) -> bool {
        let Some(previous) = self.last_completed(stage) else {
            return false;
        };
        if &previous.input_hashes != input_hashes || &previous.params != params {
            return false;
        }
        previous.output_hashes.iter().all(|(name, recorded)| {
            hash_file(&work_dir.join(name))
                .map(|h| &h == recorded)
                .unwrap_or(false)
        })
    }

    pub fn append(&mut self, entry: ManifestEntry) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .with_context(|| format!("opening manifest {}", self.path.display()))?;
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.sync_all().ok();
        self.entries.push(entry);
        Ok(())
    }
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hash_bytes(&bytes))
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

pub fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(stage: &str, input: &str) -> ManifestEntry {
        ManifestEntry {
            stage: stage.to_string(),
            skipped: false,
            started_unix_ms: 1,
            wall_ms: 2,
            params: serde_json::json!({"seed": 1}),
            input_hashes: [("in".to_string(), input.to_string())].into(),
            output_hashes: BTreeMap::new(),
            counts: BTreeMap::new(),
        }
    }

    #[test]
    fn append_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = Manifest::open(dir.path()).unwrap();
        manifest.append(entry("ingest", "abc")).unwrap();
        manifest.append(entry("verify", "def")).unwrap();

        let reloaded = Manifest::open(dir.path()).unwrap();
        assert_eq!(reloaded.entries().len(), 2);
        assert_eq!(reloaded.last_completed("ingest").unwrap().stage, "ingest");
    }

    #[test]
    fn noop_requires_matching_inputs_params_and_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let output = dir.path().join("out.jsonl");
        std::fs::write(&output, b"payload").unwrap();

        let mut manifest = Manifest::open(dir.path()).unwrap();
        let mut done = entry("mix", "abc");
        done.output_hashes
            .insert("out.jsonl".to_string(), hash_file(&output).unwrap());
        manifest.append(done).unwrap();

        let inputs: BTreeMap<String, String> = [("in".to_string(), "abc".to_string())].into();
        let params = serde_json::json!({"seed": 1});
        assert!(manifest.is_noop("mix", &inputs, &params, dir.path()));

        // Changed params defeat the no-op.
        assert!(!manifest.is_noop("mix", &inputs, &serde_json::json!({"seed": 2}), dir.path()));
        // Changed inputs defeat the no-op.
        let other: BTreeMap<String, String> = [("in".to_string(), "zzz".to_string())].into();
        assert!(!manifest.is_noop("mix", &other, &params, dir.path()));
        // Tampered output defeats the no-op.
        std::fs::write(&output, b"tampered").unwrap();
        assert!(!manifest.is_noop("mix", &inputs, &params, dir.path()));
    }
}
