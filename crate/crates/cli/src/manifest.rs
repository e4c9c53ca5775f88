//! Provenance record written next to every command's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    /// Digest of the resolved configuration (after flags, file and defaults merged).
    pub config_sha256: String,
    /// Input path to digest; directories are expanded to their files.
    pub inputs: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    /// Output file name to digest.
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    /// Two runs reproduce each other when everything but the timestamps agrees.
    pub fn same_run(&self, other: &Self) -> bool {
        let strip = |m: &Self| Self {
            started_at: String::new(),
            finished_at: String::new(),
            ..m.clone()
        };
        strip(self) == strip(other)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let s = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&s)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects provenance while a command runs.
pub struct ManifestBuilder {
    command: Vec<String>,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    seeds: Vec<u64>,
    started_at: String,
}

impl ManifestBuilder {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            config: serde_json::Value::Null,
            inputs: BTreeMap::new(),
            seeds: Vec::new(),
            started_at: now(),
        }
    }

    pub fn config(&mut self, config: &impl Serialize) -> Result<()> {
        self.config = serde_json::to_value(config)?;
        Ok(())
    }

    pub fn seeds(&mut self, seeds: Vec<u64>) {
        self.seeds = seeds;
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(path)
                .with_context(|| format!("listing {}", path.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            entries.sort();
            for e in entries.iter().filter(|e| e.is_file()) {
                self.input(e)?;
            }
            return Ok(());
        }
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Digests `outputs` (names relative to `dir`) and writes the manifest there.
    pub fn finish(self, dir: &Path, outputs: &[PathBuf]) -> Result<RunManifest> {
        let mut digests = BTreeMap::new();
        for p in outputs {
            let bytes = fs::read(p).with_context(|| format!("reading output {}", p.display()))?;
            let name = p.strip_prefix(dir).unwrap_or(p).display().to_string();
            digests.insert(name, sha256_hex(&bytes));
        }
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            config_sha256: sha256_hex(serde_json::to_string(&self.config)?.as_bytes()),
            inputs: self.inputs,
            seeds: self.seeds,
            outputs: digests,
            started_at: self.started_at,
            finished_at: now(),
        };
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_and_reproducibility_ignore_time() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.txt");
        fs::write(&out, "hello").unwrap();
        let mut b = ManifestBuilder::new(vec!["trajeval".into()]);
        b.config(&serde_json::json!({"k": 1})).unwrap();
        let m1 = b.finish(dir.path(), std::slice::from_ref(&out)).unwrap();
        assert_eq!(
            m1.outputs["a.txt"],
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        let mut m2 = RunManifest::read(dir.path()).unwrap();
        assert_eq!(m1, m2);
        m2.finished_at = "later".into();
        assert!(m1.same_run(&m2));
        m2.seeds = vec![3];
        assert!(!m1.same_run(&m2));
    }
}
