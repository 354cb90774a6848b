//! Run manifests and checksums. Every CLI output artifact gets a sidecar
//! `<artifact>.manifest.json` recording the command line, seeds, and input
//! and output checksums, so any pipeline run can be verified and replayed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::derived::Origin;
use crate::ingest::write_source_jsonl;
use crate::model::SourceDataset;

pub fn sha256_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{:x}", hasher.finalize())
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut hasher = Sha256::new();
    let mut file = std::fs::File::open(path)?;
    std::io::copy(&mut file, &mut hasher)?;
    Ok(format!("sha256:{:x}", hasher.finalize()))
}

/// Content checksum of a source dataset: the hash of its canonical JSONL
/// serialization. Stable across file copies and reformatting.
pub fn dataset_content_checksum(dataset: &SourceDataset) -> String {
    let mut buffer = Vec::new();
    write_source_jsonl(&mut buffer, dataset).expect("in-memory serialization");
    sha256_bytes(&buffer)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub global_seed: u64,
    pub input_checksums: BTreeMap<String, String>,
    pub output_checksums: BTreeMap<String, String>,
    pub tool_version: String,
    pub started_unix_secs: u64,
    pub finished_unix_secs: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub origin: Option<Origin>,
}

impl RunManifest {
    pub fn new(command_line: Vec<String>, global_seed: u64) -> Self {
        Self {
            command_line,
            global_seed,
            input_checksums: BTreeMap::new(),
            output_checksums: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_secs: unix_now(),
            finished_unix_secs: 0,
            origin: None,
        }
    }

    pub fn record_input(&mut self, path: &Path) -> std::io::Result<()> {
        self.input_checksums
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) -> std::io::Result<()> {
        self.output_checksums
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Write `<artifact>.manifest.json` next to the artifact.
    pub fn write_beside(&mut self, artifact: &Path) -> std::io::Result<PathBuf> {
        self.finished_unix_secs = unix_now();
        let path = manifest_path(artifact);
        let mut file = std::fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(path)
    }
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_format() {
        let sum = sha256_bytes(b"hello");
        assert!(sum.starts_with("sha256:"));
        assert_eq!(sum.len(), "sha256:".len() + 64);
        assert_eq!(sum, sha256_bytes(b"hello"));
        assert_ne!(sum, sha256_bytes(b"world"));
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("/tmp/out.jsonl")),
            PathBuf::from("/tmp/out.jsonl.manifest.json")
        );
    }

    #[test]
    fn content_checksum_ignores_provenance_free_reordering() {
        let d1 = SourceDataset::new(vec![], "a", "");
        let d2 = SourceDataset::new(vec![], "b", "");
        // provenance is not part of the per-line serialization
        assert_eq!(dataset_content_checksum(&d1), dataset_content_checksum(&d2));
    }
}
