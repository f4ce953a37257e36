//! Run manifest: config echo, output checksums and timing.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub full_scale: bool,
    pub samples: usize,
    pub outputs: Vec<OutputEntry>,
    pub elapsed_seconds: f64,
}

impl RunManifest {
    /// Checksums keyed by file name, the part that must match across reruns.
    pub fn checksums(&self) -> Vec<(String, String)> {
        self.outputs.iter().map(|o| (o.file.clone(), o.sha256.clone())).collect()
    }

    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a sibling temp file and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, contents).map_err(|e| CliError::io(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| CliError::io(path, e))
}

/// Collects output files for the manifest.
#[derive(Debug)]
pub struct OutputWriter<'a> {
    dir: &'a Path,
    entries: Vec<OutputEntry>,
}

impl<'a> OutputWriter<'a> {
    pub fn new(dir: &'a Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir,
            entries: Vec::new(),
        })
    }

    pub fn write(&mut self, file: &str, contents: &str) -> CliResult<()> {
        write_atomic(&self.dir.join(file), contents.as_bytes())?;
        self.entries.push(OutputEntry {
            file: file.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len(),
        });
        Ok(())
    }

    pub fn finish(self, mut manifest: RunManifest) -> CliResult<RunManifest> {
        manifest.outputs = self.entries;
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&self.dir.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(manifest)
    }
}
