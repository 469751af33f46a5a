use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Written next to every result file as `<result>.manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    pub parameters: serde_json::Value,
    pub backend: String,
    pub artifacts: Vec<Artifact>,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// SHA-256 of the result file.
    pub outcome_digest: String,
    pub version: String,
}

pub fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects artifacts for one run and writes the manifest at the end.
pub struct Recorder {
    command: String,
    started: f64,
    artifacts: Vec<Artifact>,
}

impl Recorder {
    pub fn new(command: &str) -> Self {
        Self { command: command.into(), started: now_unix(), artifacts: Vec::new() }
    }

    /// Writes `bytes` to `dir/<stem>-<hash prefix>.<ext>` and records it.
    pub fn store(&mut self, dir: &Path, role: &str, stem: &str, ext: &str, bytes: &[u8]) -> Result<PathBuf> {
        let digest = sha256_hex(bytes);
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{stem}-{}.{ext}", &digest[..12]));
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(Artifact { role: role.into(), path: path.clone(), sha256: digest });
        Ok(path)
    }

    /// Writes the result JSON and its manifest.
    pub fn finish<T: Serialize>(
        mut self,
        out: &Path,
        result: &T,
        subject: Option<String>,
        parameters: serde_json::Value,
        backend: String,
    ) -> Result<()> {
        let body = serde_json::to_vec_pretty(result)?;
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(out, &body).with_context(|| format!("writing {}", out.display()))?;
        let digest = sha256_hex(&body);
        self.artifacts.push(Artifact { role: "result".into(), path: out.to_path_buf(), sha256: digest.clone() });
        let manifest = RunManifest {
            command: self.command,
            args: std::env::args().skip(1).collect(),
            subject,
            parameters,
            backend,
            artifacts: self.artifacts,
            started_unix: self.started,
            finished_unix: now_unix(),
            outcome_digest: digest,
            version: env!("CARGO_PKG_VERSION").into(),
        };
        let mpath = manifest_path(out);
        fs::write(&mpath, serde_json::to_vec_pretty(&manifest)?).with_context(|| format!("writing {}", mpath.display()))?;
        Ok(())
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Directory for artifacts that belong to the result file `out`.
pub fn artifact_dir(out: &Path) -> PathBuf {
    out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new(".")).join("artifacts")
}
