use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliResult;

/// Provenance record written next to every output file. `hash` covers the
/// command, config, seed and version only, so it is stable across reruns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub master_seed: u64,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
    pub hash: String,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn config_hash(command: &str, config: &Value, master_seed: u64) -> String {
    let key = serde_json::json!({
        "command": command,
        "config": config,
        "master_seed": master_seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    Sha256::digest(key.to_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn start(command: &str, config: Value, master_seed: u64) -> Self {
        let hash = config_hash(command, &config, master_seed);
        let t = now();
        Self {
            command: command.to_string(),
            config,
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: t,
            finished_unix: t,
            outputs: Vec::new(),
            hash,
        }
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn finish(mut self, path: &Path) -> CliResult<PathBuf> {
        self.finished_unix = now();
        std::fs::write(path, serde_json::to_string_pretty(&self)?)?;
        Ok(path.to_path_buf())
    }
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}
