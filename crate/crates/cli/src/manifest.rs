use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Run record written as `manifest.json` next to the outputs. Carries no
/// timestamps so identical runs give identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Collects the files a command writes into one output directory.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Path for output `name`, recorded for the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    pub fn finish(
        self,
        command: &str,
        config: serde_json::Value,
        inputs: &[PathBuf],
        seeds: Vec<u64>,
    ) -> std::io::Result<PathBuf> {
        let digest = |p: &Path, label: String| -> std::io::Result<FileDigest> {
            Ok(FileDigest {
                path: label,
                sha256: sha256_file(p)?,
            })
        };
        let inputs = inputs
            .iter()
            .map(|p| digest(p, p.display().to_string()))
            .collect::<std::io::Result<Vec<_>>>()?;
        let outputs = self
            .written
            .iter()
            .map(|n| digest(&self.dir.join(n), n.clone()))
            .collect::<std::io::Result<Vec<_>>>()?;
        let manifest = Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs,
            seeds,
            outputs,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
