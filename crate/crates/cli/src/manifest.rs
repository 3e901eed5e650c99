//! Output directories and their `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::output::{Format, Table};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA: u32 = 1;

pub const SEED_POLICY: &str = "trajectory alpha draws from ChaCha8 seeded with the base seed on stream alpha; \
every cycle draws one uniform per outer site and one more per measured site; initial pair k draws from \
ChaCha8 seeded with the seed on stream k; both ensembles of quadratic-distance pair k use base seed seed+1+k; \
bootstrap intervals use a fixed internal seed";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub description: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureInfo {
    pub id: String,
    pub anchor: String,
    pub scale: f64,
    pub deviation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub seed_policy: String,
    pub workers: usize,
    pub started_unix: u64,
    pub finished_unix: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub figure: Option<FigureInfo>,
    pub files: Vec<FileEntry>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A fresh output directory; refuses existing non-empty directories.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        Self::ensure_fresh(root)?;
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new() })
    }

    /// Fails unless `root` is absent or an empty directory.
    pub fn ensure_fresh(root: &Path) -> Result<()> {
        if root.exists() {
            let nonempty = !root.is_dir() || fs::read_dir(root).map_err(|e| CliError::io(root, e))?.next().is_some();
            if nonempty {
                return Err(CliError::Output(format!(
                    "{} already exists and is not an empty directory; refusing to overwrite",
                    root.display()
                )));
            }
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8], description: &str) -> Result<()> {
        if name == MANIFEST_FILE || self.files.iter().any(|f| f.name == name) {
            return Err(CliError::Output(format!("duplicate output file {name}")));
        }
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            description: description.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_table(&mut self, stem: &str, table: &Table, formats: &[Format], description: &str) -> Result<()> {
        for &f in formats {
            self.write_bytes(&format!("{stem}.{}", f.extension()), &table.encode(f)?, description)?;
        }
        Ok(())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `manifest.json` with the recorded files and returns it.
    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest> {
        manifest.files = self.files;
        manifest.finished_unix = unix_now();
        let mut text = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Output(e.to_string()))?;
        text.push(b'\n');
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

/// Names of files whose digest no longer matches, plus unlisted files.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let m = read_manifest(dir)?;
    let mut bad = Vec::new();
    for f in &m.files {
        let path = dir.join(&f.name);
        match fs::read(&path) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
            _ => bad.push(f.name.clone()),
        }
    }
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let name = entry.map_err(|e| CliError::io(dir, e))?.file_name().to_string_lossy().into_owned();
        if name != MANIFEST_FILE && !m.files.iter().any(|f| f.name == name) {
            bad.push(name);
        }
    }
    Ok(bad)
}
