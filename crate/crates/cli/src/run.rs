//! Run directories: artifacts are staged next to the target and moved into
//! place only after the command succeeds.

use std::fs;
use std::path::{Component, Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const OUTPUT_ROOT_ENV: &str = "COVPOW_OUTPUT_ROOT";
const TOOL: &str = "covpow";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub schema_version: String,
    /// Seconds since the Unix epoch; the only non-reproducible field.
    pub created_unix: u64,
    pub config_sha256: String,
    pub inputs: Vec<FileHash>,
    /// Sorted by path.
    pub artifacts: Vec<FileHash>,
}

/// Resolves the run directory: relative paths sit under the output root,
/// which is `$COVPOW_OUTPUT_ROOT` when set and the working directory
/// otherwise.
pub fn resolve_run_dir(output_dir: &str) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    root.join(output_dir)
}

pub struct RunDir {
    target: PathBuf,
    staging: PathBuf,
    artifacts: Vec<FileHash>,
    inputs: Vec<FileHash>,
    finished: bool,
}

fn check_relative(rel: &str) -> CliResult<()> {
    let p = Path::new(rel);
    let ok = !rel.is_empty()
        && p.components().all(|c| matches!(c, Component::Normal(_)))
        && rel != MANIFEST;
    if ok {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "artifact path {rel:?} is not a plain relative path"
        )))
    }
}

impl RunDir {
    pub fn create(target: PathBuf) -> CliResult<Self> {
        let reusable = !target.exists()
            || target.join(MANIFEST).is_file()
            || fs::read_dir(&target).is_ok_and(|mut d| d.next().is_none());
        if !reusable {
            return Err(CliError::config(format!(
                "{} exists and is neither empty nor a previous run directory",
                target.display()
            )));
        }
        let name = target
            .file_name()
            .ok_or_else(|| CliError::config("output directory has no final component"))?
            .to_string_lossy()
            .into_owned();
        let parent = target.parent().map(Path::to_path_buf).unwrap_or_default();
        let parent = if parent.as_os_str().is_empty() {
            PathBuf::from(".")
        } else {
            parent
        };
        fs::create_dir_all(&parent)?;
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        Ok(RunDir {
            target,
            staging,
            artifacts: Vec::new(),
            inputs: Vec::new(),
            finished: false,
        })
    }

    pub fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> CliResult<()> {
        check_relative(rel)?;
        let bytes = bytes.as_ref();
        let path = self.staging.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, bytes)?;
        self.artifacts.push(FileHash {
            path: rel.replace('\\', "/"),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, v: &T) -> CliResult<()> {
        let s = covpow::io::to_json_string(v)?;
        self.write(rel, s)
    }

    /// Records files written directly into a staged subdirectory.
    pub fn register_dir(&mut self, rel: &str) -> CliResult<()> {
        check_relative(rel)?;
        let dir = self.staging.join(rel);
        let mut names: Vec<String> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect::<Result<_, _>>()?;
        names.sort();
        for n in names {
            let bytes = fs::read(dir.join(&n))?;
            self.artifacts.push(FileHash {
                path: format!("{rel}/{n}"),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        Ok(())
    }

    /// Path of a subdirectory inside the staging area.
    pub fn staged_dir(&self, rel: &str) -> CliResult<PathBuf> {
        check_relative(rel)?;
        Ok(self.staging.join(rel))
    }

    pub fn add_input(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.push(FileHash {
            path: label.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }

    pub fn finish(
        mut self,
        command: &str,
        schema_version: &str,
        config: &[u8],
    ) -> CliResult<Manifest> {
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            schema_version: schema_version.into(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config_sha256: sha256_hex(config),
            inputs: std::mem::take(&mut self.inputs),
            artifacts: std::mem::take(&mut self.artifacts),
        };
        fs::write(
            self.staging.join(MANIFEST),
            covpow::io::to_json_string(&manifest)?,
        )?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.staging, &self.target)?;
        self.finished = true;
        Ok(manifest)
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if !self.finished {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}
