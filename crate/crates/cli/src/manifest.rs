//! Run manifests and all-or-nothing output staging.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub elapsed_ms: u128,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: &'static str,
    pub config: Value,
    pub seeds: Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub timing: Timing,
}

pub fn digest(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Collects a run's description while it executes.
pub struct Run {
    command: String,
    started: Instant,
    started_unix_ms: u128,
    inputs: Vec<InputDigest>,
}

impl Run {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            started: Instant::now(),
            started_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            inputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    pub fn finish(self, config: Value, seeds: Value, outputs: &Outputs) -> RunManifest {
        RunManifest {
            command: self.command,
            argv: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION"),
            config,
            seeds,
            inputs: self.inputs,
            outputs: outputs
                .files
                .iter()
                .map(|(p, _)| p.display().to_string())
                .collect(),
            timing: Timing {
                started_unix_ms: self.started_unix_ms,
                elapsed_ms: self.started.elapsed().as_millis(),
            },
        }
    }
}

/// Output files held in memory until every result is ready, then written
/// together. A failed write removes the files already written.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, contents: impl Into<Vec<u8>>) {
        self.files.push((path.into(), contents.into()));
    }

    pub fn commit(self) -> Result<()> {
        let mut written: Vec<&Path> = Vec::new();
        for (path, contents) in &self.files {
            let res = (|| {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)?;
                }
                fs::write(path, contents)
            })();
            if let Err(e) = res {
                for p in written {
                    let _ = fs::remove_file(p);
                }
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            written.push(path);
        }
        Ok(())
    }
}

/// Writes the manifest with the other outputs, or to stderr when no
/// manifest path is known.
pub fn commit_with_manifest(
    mut outputs: Outputs,
    run: Run,
    config: Value,
    seeds: Value,
    path: Option<PathBuf>,
) -> Result<()> {
    match path {
        Some(path) => {
            outputs.add(path.clone(), Vec::new());
            let manifest = run.finish(config, seeds, &outputs);
            let json = serde_json::to_string_pretty(&manifest)? + "\n";
            let last = outputs.files.last_mut().expect("manifest slot");
            last.1 = json.into_bytes();
            outputs.commit()
        }
        None => {
            let manifest = run.finish(config, seeds, &outputs);
            outputs.commit()?;
            eprintln!("{}", serde_json::to_string(&manifest)?);
            Ok(())
        }
    }
}

/// `dir/stem.<suffix>` next to `primary`.
pub fn sibling(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    primary.with_file_name(format!("{stem}.{suffix}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_commit_removes_written_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("blocker"), "").unwrap();
        let mut outputs = Outputs::default();
        outputs.add(dir.path().join("a.json"), "{}");
        outputs.add(dir.path().join("blocker/b.json"), "{}");
        assert!(outputs.commit().is_err());
        assert!(!dir.path().join("a.json").exists());
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(
            sibling(Path::new("out/m.json"), "trace.jsonl"),
            PathBuf::from("out/m.trace.jsonl")
        );
        assert_eq!(
            sibling(Path::new("m"), "manifest.json"),
            PathBuf::from("m.manifest.json")
        );
    }
}
