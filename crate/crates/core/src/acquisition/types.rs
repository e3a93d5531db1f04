use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::prompts::{ModelFamily, TemplateId};

/// One organic search result, ranked from 1 in provider order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub rank: u32,
    pub title: String,
    pub url: String,
    pub snippet: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceKind {
    Gsnip,
    Gptsum,
    Llamasum,
    Combined,
}

impl SourceKind {
    pub fn for_family(family: ModelFamily) -> Self {
        match family {
            ModelFamily::Gpt => SourceKind::Gptsum,
            ModelFamily::Llama => SourceKind::Llamasum,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Gsnip => "GSNIP",
            SourceKind::Gptsum => "GPTSUM",
            SourceKind::Llamasum => "LLAMASUM",
            SourceKind::Combined => "COMBINED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceParams {
    Snippets {
        k: usize,
    },
    Summary {
        template: TemplateId,
        model_id: String,
        max_tokens: u32,
    },
    Combined {
        components: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Provenance {
    SearchResults(Vec<SearchResult>),
    PromptHash(String),
    Components(Vec<String>),
}

/// Text acquired for one entity from one source configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcquiredText {
    pub entity_id: String,
    pub source: SourceKind,
    pub params: SourceParams,
    pub text: String,
    pub retrieved_at: DateTime<Utc>,
    pub provenance: Provenance,
    /// Set when a summary declined to describe the entity; `text` is then empty.
    #[serde(default)]
    pub refusal: bool,
}

impl AcquiredText {
    /// Short tag naming the source configuration, e.g. `gsnip10+gptsum`.
    pub fn signature(&self) -> String {
        match (&self.source, &self.params) {
            (_, SourceParams::Snippets { k }) => format!("gsnip{k}"),
            (_, SourceParams::Combined { components }) => components.join("+"),
            (SourceKind::Llamasum, _) => "llamasum".to_string(),
            _ => "gptsum".to_string(),
        }
    }

    pub fn search_results(&self) -> Option<&[SearchResult]> {
        match &self.provenance {
            Provenance::SearchResults(r) => Some(r),
            _ => None,
        }
    }
}

/// What to acquire for an entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SourceSpec {
    Gsnip { k: usize },
    Summary(ModelFamily),
    Combined(Vec<SourceSpec>),
}

impl SourceSpec {
    /// Parses `gsnip`, `gsnip5`, `gptsum`, `llamasum` and `+`-joined
    /// combinations such as `gsnip+gptsum`. A bare `gsnip` uses `default_k`.
    pub fn parse(s: &str, default_k: usize) -> Result<Self, String> {
        let parts: Vec<&str> = s.split('+').map(str::trim).collect();
        if parts.len() > 1 {
            let specs = parts
                .iter()
                .map(|p| Self::parse_leaf(p, default_k))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(SourceSpec::Combined(specs));
        }
        Self::parse_leaf(parts[0], default_k)
    }

    fn parse_leaf(s: &str, default_k: usize) -> Result<Self, String> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "gptsum" => Ok(SourceSpec::Summary(ModelFamily::Gpt)),
            "llamasum" => Ok(SourceSpec::Summary(ModelFamily::Llama)),
            "gsnip" => Ok(SourceSpec::Gsnip { k: default_k }),
            other => match other.strip_prefix("gsnip").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(SourceSpec::Gsnip { k }),
                _ => Err(format!("unknown source {s:?}")),
            },
        }
    }

    pub fn signature(&self) -> String {
        match self {
            SourceSpec::Gsnip { k } => format!("gsnip{k}"),
            SourceSpec::Summary(ModelFamily::Gpt) => "gptsum".into(),
            SourceSpec::Summary(ModelFamily::Llama) => "llamasum".into(),
            SourceSpec::Combined(parts) => parts
                .iter()
                .map(SourceSpec::signature)
                .collect::<Vec<_>>()
                .join("+"),
        }
    }

    /// Leaf specs, in order.
    pub fn leaves(&self) -> Vec<&SourceSpec> {
        match self {
            SourceSpec::Combined(parts) => parts.iter().flat_map(|p| p.leaves()).collect(),
            leaf => vec![leaf],
        }
    }

    pub fn needs_search(&self) -> bool {
        self.leaves().iter().any(|l| matches!(l, SourceSpec::Gsnip { .. }))
    }

    pub fn needs_llm(&self) -> bool {
        self.leaves().iter().any(|l| matches!(l, SourceSpec::Summary(_)))
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.signature())
    }
}
