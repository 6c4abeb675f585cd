//! Run manifests and hashed output files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
}

/// What was run; enough to re-run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Invocation {
    Kernel {
        dim: usize,
        theta: f64,
        rmax: Option<f64>,
        points: Option<usize>,
    },
    Solve,
    Check {
        kind: CheckKind,
    },
    Scan,
    Recursion,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Necessary,
    Sufficient,
    Supersolution,
    Lemma41,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub invocation: Invocation,
    /// Config bytes as read; the hash below is taken over them.
    pub config_text: Option<String>,
    pub config_sha256: Option<String>,
    pub config: Option<serde_json::Value>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(
        invocation: Invocation,
        config_text: Option<&str>,
        outputs: Vec<OutputFile>,
    ) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            invocation,
            config_text: config_text.map(str::to_owned),
            config_sha256: config_text.map(|t| sha256_hex(t.as_bytes())),
            config: config_text.and_then(|t| serde_json::from_str(t).ok()),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp,
            outputs,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Checks the stored hash against the stored config text.
    pub fn config_hash_matches(&self) -> bool {
        match (&self.config_text, &self.config_sha256) {
            (Some(t), Some(h)) => sha256_hex(t.as_bytes()) == *h,
            (None, None) => true,
            _ => false,
        }
    }
}

/// Files written under one run directory, in write order.
#[derive(Debug)]
pub struct OutputSet {
    root: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputSet {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: vec![],
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        if Path::new(rel).is_absolute() || rel.split('/').any(|c| c == "..") {
            return Err(Error::Invalid(format!(
                "output path {rel} escapes the run directory"
            )));
        }
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(OutputFile {
            path: rel.to_owned(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write(
            rel,
            (serde_json::to_string_pretty(value)? + "\n").as_bytes(),
        )
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    pub fn into_files(self) -> Vec<OutputFile> {
        self.files
    }
}
