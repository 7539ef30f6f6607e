//! Model persistence: a JSON manifest naming each tensor (shape + byte
//! offset) next to one binary blob of little-endian 32-bit floats in
//! row-major order. The manifest also carries the format version,
//! hyperparameters, hashes, and the run seed so artifacts are
//! self-describing and mismatches are detectable.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// element offset into the blob (not bytes)
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub kind: String,
    pub seed: u64,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab_hash: Option<String>,
    pub hyperparams: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl Manifest {
    pub fn tensor(&self, name: &str) -> Result<&TensorEntry> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Format(format!("manifest has no tensor {name:?}")))
    }
}

pub fn manifest_path(prefix: &Path) -> PathBuf {
    let mut p = prefix.as_os_str().to_owned();
    p.push(".manifest.json");
    PathBuf::from(p)
}

pub fn blob_path(prefix: &Path) -> PathBuf {
    let mut p = prefix.as_os_str().to_owned();
    p.push(".blob");
    PathBuf::from(p)
}

/// Write `<prefix>.manifest.json` and `<prefix>.blob`.
pub fn save(prefix: &Path, manifest: &Manifest, values: &[f64]) -> Result<()> {
    let expected: usize = manifest.tensors.iter().map(|t| t.len).sum();
    if expected != values.len() {
        return Err(Error::Shape(format!(
            "manifest describes {expected} elements, got {}",
            values.len()
        )));
    }
    for t in &manifest.tensors {
        let shape_len: usize = t.shape.iter().product();
        if shape_len != t.len || t.offset + t.len > values.len() {
            return Err(Error::Shape(format!("tensor {:?} is inconsistent", t.name)));
        }
    }
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Format(format!("manifest serialization: {e}")))?;
    let mpath = manifest_path(prefix);
    fs::write(&mpath, json.as_bytes()).map_err(|e| Error::io(mpath.display().to_string(), e))?;
    let mut blob = Vec::with_capacity(values.len() * 4);
    for &v in values {
        blob.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let bpath = blob_path(prefix);
    fs::write(&bpath, &blob).map_err(|e| Error::io(bpath.display().to_string(), e))?;
    Ok(())
}

/// Read a `<prefix>.manifest.json` + `<prefix>.blob` pair. Returns the
/// missing-stage error text when the artifact does not exist.
pub fn load(prefix: &Path, producing_stage: &str) -> Result<(Manifest, Vec<f64>)> {
    let mpath = manifest_path(prefix);
    if !mpath.exists() {
        return Err(Error::MissingStage {
            stage: producing_stage.to_string(),
            detail: format!("{} not found", mpath.display()),
        });
    }
    let raw = fs::read_to_string(&mpath).map_err(|e| Error::io(mpath.display().to_string(), e))?;
    let manifest: Manifest =
        serde_json::from_str(&raw).map_err(|e| Error::Format(format!("manifest parse: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported artifact format version {}",
            manifest.format_version
        )));
    }
    let bpath = blob_path(prefix);
    let blob = fs::read(&bpath).map_err(|e| Error::io(bpath.display().to_string(), e))?;
    if blob.len() % 4 != 0 {
        return Err(Error::Format("blob length not a multiple of 4".into()));
    }
    let values: Vec<f64> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let expected: usize = manifest.tensors.iter().map(|t| t.len).sum();
    if expected != values.len() {
        return Err(Error::Format(format!(
            "blob has {} elements, manifest describes {expected}",
            values.len()
        )));
    }
    Ok((manifest, values))
}

/// FNV-1a over arbitrary bytes, hex-encoded; used for config hashes.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
