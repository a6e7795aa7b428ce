//! Run manifests: what went into an output directory and what came out.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: String,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub arguments: BTreeMap<String, String>,
    pub configs: BTreeMap<String, FileDigest>,
    pub inputs: BTreeMap<String, FileDigest>,
    pub outputs: BTreeMap<String, FileDigest>,
    pub warnings: Vec<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn digest(path: &Path) -> std::io::Result<FileDigest> {
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
    })
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, threads: Option<usize>) -> Self {
        RunManifest {
            command: command.to_string(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            threads,
            arguments: BTreeMap::new(),
            configs: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            warnings: Vec::new(),
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
        }
    }

    pub fn argument(&mut self, name: &str, value: impl ToString) {
        self.arguments.insert(name.to_string(), value.to_string());
    }

    pub fn config(&mut self, role: &str, path: &Path) -> std::io::Result<()> {
        self.configs.insert(role.to_string(), digest(path)?);
        Ok(())
    }

    /// Records an input and warns when an upstream manifest disagrees with it.
    pub fn input(&mut self, role: &str, path: &Path) -> std::io::Result<()> {
        let d = digest(path)?;
        if let Some(w) = stale_output(path, &d.sha256) {
            self.warn(w);
        }
        self.inputs.insert(role.to_string(), d);
        Ok(())
    }

    /// Compares this run's inputs with the inputs recorded next to an upstream artifact.
    pub fn check_upstream_inputs(&mut self, artifact: &Path) {
        let Some(up) = read_sibling_manifest(artifact) else {
            return;
        };
        let mut found = Vec::new();
        for (role, mine) in &self.inputs {
            if let Some(theirs) = up.inputs.get(role) {
                if theirs.sha256 != mine.sha256 {
                    found.push(format!(
                        "stale input: `{role}` ({}) differs from the file recorded when {} was produced ({})",
                        mine.path,
                        artifact.display(),
                        theirs.path
                    ));
                }
            }
        }
        for w in found {
            self.warn(w);
        }
    }

    pub fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.warnings.push(message);
    }

    pub fn output(&mut self, dir: &Path, name: &str) -> std::io::Result<()> {
        let path = dir.join(name);
        self.outputs.insert(
            name.to_string(),
            FileDigest {
                path: name.to_string(),
                sha256: sha256_file(&path)?,
            },
        );
        Ok(())
    }

    pub fn write(mut self, dir: &Path) -> std::io::Result<PathBuf> {
        self.finished_unix_ms = now_ms();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

fn read_sibling_manifest(artifact: &Path) -> Option<RunManifest> {
    let dir = artifact.parent()?;
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
    serde_json::from_str(&text).ok()
}

/// Warning text when `path` was produced by a run whose manifest recorded a different digest.
fn stale_output(path: &Path, sha: &str) -> Option<String> {
    let up = read_sibling_manifest(path)?;
    let name = path.file_name()?.to_string_lossy().to_string();
    let recorded = up.outputs.get(&name)?;
    (recorded.sha256 != sha).then(|| format!("stale input: {} changed after its `{}` run wrote it", path.display(), up.command))
}
