use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use entclass_core::corpus::system_instruction_version;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub path: PathBuf,
    pub sha256: String,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEntry {
    pub command: String,
    pub started_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub config_fingerprint: String,
    pub config: serde_json::Value,
    pub dataset: Option<DatasetInfo>,
    pub source_signatures: Vec<String>,
    pub system_instruction_version: u32,
    pub deviations: Vec<String>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub commands: Vec<CommandEntry>,
}

fn deviations(config: &RunConfig) -> Vec<String> {
    vec![
        format!(
            "native classifier: hashed-feature softmax with learning_rate {} (retuned from hosted fine-tuning defaults)",
            config.train.learning_rate
        ),
        format!(
            "system instruction wording is local, template version {}",
            system_instruction_version()
        ),
        "SIC scheme has 27 major-group categories".into(),
    ]
}

impl RunManifest {
    pub fn new(run_id: &str, config: &RunConfig) -> Self {
        let now = Utc::now();
        Self {
            run_id: run_id.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_fingerprint: config.fingerprint(),
            config: serde_json::to_value(config).expect("config serializes"),
            dataset: None,
            source_signatures: Vec::new(),
            system_instruction_version: system_instruction_version(),
            deviations: deviations(config),
            created_at: now,
            updated_at: now,
            commands: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Failure::data(e).context(format!("reading {}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), Failure> {
        write_json(path, self)
    }

    /// Opens or creates the manifest in `run_dir` and records `command`
    /// before the command writes anything else. A manifest written under a
    /// different config is refused.
    pub fn begin(
        run_dir: &Path,
        run_id: &str,
        config: &RunConfig,
        command: &str,
        dataset: Option<DatasetInfo>,
        signatures: &[String],
    ) -> Result<Self, Failure> {
        std::fs::create_dir_all(run_dir)?;
        let path = run_dir.join(MANIFEST_FILE);
        let mut manifest = if path.exists() {
            let m = Self::load(&path)?;
            if m.config_fingerprint != config.fingerprint() {
                return Err(Failure::config(anyhow::anyhow!(
                    "run {run_id} was created with a different config; pick another --run-id"
                )));
            }
            m
        } else {
            Self::new(run_id, config)
        };
        let now = Utc::now();
        manifest.updated_at = now;
        manifest.commands.push(CommandEntry { command: command.to_string(), started_at: now });
        if dataset.is_some() {
            manifest.dataset = dataset;
        }
        for s in signatures {
            if !manifest.source_signatures.contains(s) {
                manifest.source_signatures.push(s.clone());
            }
        }
        manifest.save(&path)?;
        Ok(manifest)
    }
}

/// Pretty JSON with a trailing newline, written through a temp file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
