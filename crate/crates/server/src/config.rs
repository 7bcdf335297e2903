use std::path::{Path, PathBuf};

use labforge_core::{Error, Result};
use serde::Deserialize;

fn default_snapshot_every() -> u64 {
    200
}

/// Service configuration file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    /// Each exercise keeps its log and snapshot under `data_dir/<exercise_id>/`.
    pub data_dir: PathBuf,
    pub exercises: Vec<ExerciseEntry>,
    /// Header carrying the client address when running behind a reverse
    /// proxy, e.g. `x-forwarded-for`. Unset means the peer address is used.
    #[serde(default)]
    pub trusted_proxy_header: Option<String>,
    /// Write a state snapshot after this many appended events; 0 disables.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExerciseEntry {
    pub definition: PathBuf,
    #[serde(default)]
    pub detection: Option<PathBuf>,
}

impl ServiceConfig {
    /// Relative paths are resolved against `base_dir`.
    pub fn from_yaml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: ServiceConfig = serde_yaml::from_str(text)?;
        config.data_dir = base_dir.join(&config.data_dir);
        for entry in &mut config.exercises {
            entry.definition = base_dir.join(&entry.definition);
            entry.detection = entry.detection.as_ref().map(|p| base_dir.join(p));
        }
        if config.exercises.is_empty() {
            return Err(Error::config("service config lists no exercises"));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_yaml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }
}
