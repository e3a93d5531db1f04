//! Run configuration: one TOML file, overridable with `--set section.key=value`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use entclass_core::acquisition::AcquisitionConfig;
use entclass_core::classify::TrainConfig;
use entclass_core::eval::{default_thresholds, ThresholdRule, DEFAULT_ABLATION_KS};
use entclass_core::sha256_hex;
use entclass_core::taxonomy::{SplitRatios, TaskId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskId,
    pub dataset: PathBuf,
    /// Replacement healthcare code table.
    pub taxonomy_table: Option<PathBuf>,
    /// Source spec such as `gsnip`, `gptsum` or `gsnip+gptsum`.
    pub sources: String,
    pub runs_dir: PathBuf,
    /// Drives the split shuffle and training order.
    pub seed: u64,
    pub split: SplitSection,
    pub search: SearchSection,
    pub llm: LlmSection,
    pub acquisition: AcquisitionConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: TaskId::Sic,
            dataset: PathBuf::from("dataset.csv"),
            taxonomy_table: None,
            sources: "gsnip".into(),
            runs_dir: PathBuf::from("runs"),
            seed: 0,
            split: SplitSection::default(),
            search: SearchSection::default(),
            llm: LlmSection::default(),
            acquisition: AcquisitionConfig::default(),
            train: TrainConfig::default(),
            eval: EvalSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let r = SplitRatios::default();
        Self { train: r.train, dev: r.dev, test: r.test }
    }
}

impl SplitSection {
    pub fn ratios(&self) -> SplitRatios {
        SplitRatios { train: self.train, dev: self.dev, test: self.test }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub endpoint: String,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self { endpoint: "https://serpapi.com/search".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    /// OpenAI-compatible base URL.
    pub endpoint: String,
    pub gpt_model: String,
    /// Defaults to `endpoint`.
    pub llama_endpoint: Option<String>,
    pub llama_model: String,
    pub fine_tune_base_model: String,
    pub poll_interval_ms: u64,
    pub max_polls: usize,
}

impl Default for LlmSection {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1".into(),
            gpt_model: "gpt-4o-mini".into(),
            llama_endpoint: None,
            llama_model: "meta-llama/Llama-3.1-8B-Instruct".into(),
            fine_tune_base_model: "gpt-4o-mini-2024-07-18".into(),
            poll_interval_ms: 30_000,
            max_polls: 240,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub thresholds: Vec<f64>,
    pub rule: ThresholdRule,
    pub ablation_ks: Vec<usize>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(),
            rule: ThresholdRule::Exceeds,
            ablation_ks: DEFAULT_ABLATION_KS.to_vec(),
        }
    }
}

fn apply_set(root: &mut toml::Table, assignment: &str) -> anyhow::Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {assignment:?}"))?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        // bare words such as `--set sources=gsnip` are strings
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut table = root;
    for part in path {
        table = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("{key}: {part} is not a section"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn load(path: Option<&Path>, sets: &[String], seed: Option<u64>) -> anyhow::Result<Self> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        for s in sets {
            apply_set(&mut root, s)?;
        }
        let mut config: RunConfig = toml::Value::Table(root).try_into().context("invalid config")?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.train.seed = config.seed;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.acquisition.validate()?;
        self.train.validate()?;
        self.split.ratios().counts(0)?;
        if self.sources.trim().is_empty() {
            bail!("sources is empty");
        }
        Ok(())
    }

    /// Hash of the canonical JSON snapshot.
    pub fn fingerprint(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    /// The default run id: a prefix of the fingerprint, which already
    /// includes the seed.
    pub fn default_run_id(&self) -> String {
        self.fingerprint()[..12].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_seed() {
        let sets = vec![
            "train.epochs=5".to_string(),
            "sources=gsnip+gptsum".to_string(),
            "search.endpoint=http://127.0.0.1:9/search".to_string(),
            "eval.ablation_ks=[1, 5]".to_string(),
        ];
        let c = RunConfig::load(None, &sets, Some(7)).unwrap();
        assert_eq!(c.train.epochs, 5);
        assert_eq!(c.sources, "gsnip+gptsum");
        assert_eq!(c.search.endpoint, "http://127.0.0.1:9/search");
        assert_eq!(c.eval.ablation_ks, [1, 5]);
        assert_eq!((c.seed, c.train.seed), (7, 7));

        let other = RunConfig::load(None, &sets, Some(8)).unwrap();
        assert_ne!(c.default_run_id(), other.default_run_id());
        assert_eq!(c.default_run_id(), RunConfig::load(None, &sets, Some(7)).unwrap().default_run_id());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(RunConfig::load(None, &["nonsense=1".into()], None).is_err());
        assert!(RunConfig::load(None, &["train.epochs=0".into()], None).is_err());
        assert!(RunConfig::load(None, &["epochs".into()], None).is_err());
        assert!(RunConfig::load(None, &["task=plants".into()], None).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("entclass.toml");
        let c = RunConfig::default();
        std::fs::write(&path, toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(RunConfig::load(Some(&path), &[], None).unwrap(), c);
    }
}
