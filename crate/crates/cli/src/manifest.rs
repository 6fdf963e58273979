//! Run manifests: what went in, what came out, and with which settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::io::{sha256_bytes, sha256_file, write_json};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub finished_at: String,
}

pub struct ManifestBuilder {
    command: String,
    started_at: String,
    seeds: BTreeMap<String, u64>,
    config: serde_json::Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            started_at: now(),
            seeds: BTreeMap::new(),
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    pub fn config(&mut self, value: serde_json::Value) -> &mut Self {
        self.config = value;
        self
    }

    pub fn input(&mut self, p: &Path) -> &mut Self {
        self.inputs.push(p.to_path_buf());
        self
    }

    pub fn output(&mut self, p: &Path) -> &mut Self {
        self.outputs.push(p.to_path_buf());
        self
    }

    pub fn write(&self, path: &Path) -> Result<RunManifest> {
        let digest = |ps: &[PathBuf]| -> Result<Vec<FileDigest>> {
            ps.iter()
                .map(|p| {
                    Ok(FileDigest {
                        path: p.display().to_string(),
                        sha256: sha256_file(p)?,
                    })
                })
                .collect()
        };
        let config_sha256 = sha256_bytes(serde_json::to_string(&self.config)?.as_bytes());
        let m = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.clone(),
            argv: std::env::args().collect(),
            seeds: self.seeds.clone(),
            config: self.config.clone(),
            config_sha256,
            inputs: digest(&self.inputs)?,
            outputs: digest(&self.outputs)?,
            started_at: self.started_at.clone(),
            finished_at: now(),
        };
        write_json(path, &m)?;
        Ok(m)
    }
}
