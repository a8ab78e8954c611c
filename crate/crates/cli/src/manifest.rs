use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use parkodo_core::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Record of one command run: what went in, what came out, and the
/// configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn hash_all(base: &Path, files: &[PathBuf]) -> Result<Vec<FileHash>> {
    files
        .iter()
        .map(|f| {
            let shown = f.strip_prefix(base).unwrap_or(f);
            Ok(FileHash {
                path: shown.to_string_lossy().replace('\\', "/"),
                sha256: sha256_file(f)?,
            })
        })
        .collect()
}

impl Manifest {
    pub fn file_name(command: &str) -> String {
        format!("manifest.{command}.json")
    }

    /// Hash the files and write `manifest.<command>.json` into `out`.
    pub fn write(
        out: &Path,
        command: &str,
        seed: Option<u64>,
        config: Option<String>,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<PathBuf> {
        let manifest = Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: hash_all(out, inputs)?,
            outputs: hash_all(out, outputs)?,
        };
        let path = out.join(Self::file_name(command));
        parkodo_core::io::write_json(&path, &manifest)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Check that every listed output under `base` still has its hash.
    pub fn verify_outputs(&self, base: &Path) -> Result<()> {
        for f in &self.outputs {
            let actual = sha256_file(&base.join(&f.path))?;
            if actual != f.sha256 {
                return Err(parkodo_core::Error::InvalidLog(format!(
                    "{} changed since the manifest was written",
                    f.path
                )));
            }
        }
        Ok(())
    }
}
