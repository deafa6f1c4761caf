use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Sidecar written next to every output file. The timestamp lives here and
/// nowhere else, so data files stay byte-identical across reruns.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub output_path: PathBuf,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, String>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, output_path: &Path, seed: Option<u64>) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            output_path: output_path.to_path_buf(),
            seed,
            parameters: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.toml");
        PathBuf::from(name)
    }

    pub fn write(&self) -> anyhow::Result<PathBuf> {
        let path = if self.output_path.is_dir() {
            self.output_path.join("manifest.toml")
        } else {
            Self::sidecar_path(&self.output_path)
        };
        std::fs::write(&path, toml::to_string(self)?)?;
        Ok(path)
    }
}
