//! Run manifests and artifact writing.
//!
//! Every JSON artifact embeds the run's manifest under a `manifest` key, and
//! `manifest.json` in the output directory lists all artifacts of the run.
//! The `timestamp` field is the only part that varies between identical runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::exit::{self, Failure};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<InputDigest>,
    pub config: Value,
    pub timestamp: String,
}

pub struct Run {
    manifest: Manifest,
    out_dir: PathBuf,
    artifacts: Vec<String>,
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(exit::IO, format!("{}: {e}", path.display()))
}

impl Run {
    pub fn new(command: &'static str, out_dir: PathBuf) -> Self {
        Run {
            manifest: Manifest {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command,
                inputs: Vec::new(),
                config: Value::Null,
                timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            },
            out_dir,
            artifacts: Vec::new(),
        }
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.manifest.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            bytes: bytes.len(),
        });
        Ok(bytes)
    }

    pub fn set_config<T: Serialize>(&mut self, config: &T) {
        self.manifest.config = serde_json::to_value(config).expect("config serializes");
    }

    fn target(&mut self, name: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out_dir).map_err(|e| io_failure(&self.out_dir, e))?;
        self.artifacts.push(name.to_string());
        Ok(self.out_dir.join(name))
    }

    /// Writes `value` as pretty JSON with the manifest embedded.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut doc = serde_json::to_value(value).expect("artifact serializes");
        match &mut doc {
            Value::Object(map) => {
                map.insert("manifest".into(), serde_json::to_value(&self.manifest).unwrap());
            }
            other => {
                let inner = std::mem::take(other);
                *other = serde_json::json!({ "data": inner, "manifest": &self.manifest });
            }
        }
        let path = self.target(name)?;
        let mut text = serde_json::to_string_pretty(&doc).unwrap();
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_failure(&path, e))
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.target(name)?;
        fs::write(&path, bytes).map_err(|e| io_failure(&path, e))
    }

    /// Writes `manifest.json` listing every artifact of the run.
    pub fn finish(self) -> Result<PathBuf, Failure> {
        #[derive(Serialize)]
        struct Full<'a> {
            #[serde(flatten)]
            manifest: &'a Manifest,
            artifacts: &'a [String],
        }
        fs::create_dir_all(&self.out_dir).map_err(|e| io_failure(&self.out_dir, e))?;
        let path = self.out_dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&Full {
            manifest: &self.manifest,
            artifacts: &self.artifacts,
        })
        .unwrap();
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
        Ok(self.out_dir)
    }
}
