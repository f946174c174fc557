//! Stage artifacts: JSONL record files plus a manifest with content hashes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gateway::Failure;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Decode { path: String, line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, ArtifactError> {
    let mut f = File::open(path).map_err(io_err(path))?;
    let mut h = Sha256::new();
    std::io::copy(&mut f, &mut h).map_err(io_err(path))?;
    Ok(hex::encode(h.finalize()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), ArtifactError> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    for row in rows {
        let line = serde_json::to_string(&row).expect("artifact rows serialise");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ArtifactError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ArtifactError::Decode {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let text = serde_json::to_string_pretty(value).expect("artifact serialises");
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ArtifactError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| ArtifactError::Decode {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Complete,
    /// Some provider requests failed; see `failures`.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub schema_version: u32,
    /// Hash of the stage's config, input files and upstream content.
    pub fingerprint: String,
    pub upstream: BTreeMap<String, String>,
    pub produced_at: String,
    /// File name → sha256.
    pub files: BTreeMap<String, String>,
    /// sha256 over the sorted (name, hash) pairs of `files`.
    pub content_hash: String,
    pub status: StageStatus,
    #[serde(default)]
    pub failures: Vec<Failure>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

pub fn content_hash(files: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (name, sha) in files {
        h.update(name.as_bytes());
        h.update(b"\0");
        h.update(sha.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Output directory for one stage.
#[derive(Debug, Clone)]
pub struct StageDir {
    pub dir: PathBuf,
}

impl StageDir {
    pub fn new(root: &Path, stage: &str) -> Self {
        StageDir { dir: root.join(stage) }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.path(MANIFEST)
    }

    pub fn read_manifest(&self) -> Option<Manifest> {
        read_json(&self.manifest_path()).ok()
    }

    /// Clear the stage directory before producing new output, so an
    /// interrupted run never leaves a manifest next to mismatched files.
    pub fn reset(&self) -> Result<(), ArtifactError> {
        if self.dir.exists() {
            std::fs::remove_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        }
        std::fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))
    }

    /// Hash `files` and write the manifest last.
    #[allow(clippy::too_many_arguments)]
    pub fn seal(
        &self,
        stage: &str,
        fingerprint: &str,
        upstream: BTreeMap<String, String>,
        files: &[&str],
        failures: Vec<Failure>,
        diagnostics: Vec<String>,
    ) -> Result<Manifest, ArtifactError> {
        let mut hashes = BTreeMap::new();
        for f in files {
            hashes.insert(f.to_string(), sha256_file(&self.path(f))?);
        }
        let manifest = Manifest {
            stage: stage.to_string(),
            schema_version: SCHEMA_VERSION,
            fingerprint: fingerprint.to_string(),
            upstream,
            produced_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            content_hash: content_hash(&hashes),
            files: hashes,
            status: if failures.is_empty() {
                StageStatus::Complete
            } else {
                StageStatus::Partial
            },
            failures,
            diagnostics,
        };
        write_json(&self.manifest_path(), &manifest)?;
        Ok(manifest)
    }

    /// Names of files whose on-disk hash differs from the manifest.
    pub fn verify(&self, manifest: &Manifest) -> Vec<String> {
        manifest
            .files
            .iter()
            .filter(|(name, sha)| sha256_file(&self.path(name)).ok().as_deref() != Some(sha.as_str()))
            .map(|(name, _)| name.clone())
            .collect()
    }
}
