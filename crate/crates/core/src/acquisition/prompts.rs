//! Summary-generation prompt templates.
//!
//! Bodies are kept byte-for-byte, including typographic apostrophes and the
//! en dash in "250–300". Each body holds exactly one entity-name placeholder.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::taxonomy::TaskId;
use crate::util::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Gpt,
    Llama,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TemplateId {
    GptSic,
    GptHc,
    LlamaSic,
    LlamaHc,
}

const GPT_SIC: &str =
    "Summarize the main business activities, services, vision, and mission of [ORG_NAME].";

const GPT_HC: &str = "Summarize the healthcare specialization, scope of practice, and typical \
services provided by [Provider_NAME]. The summary should describe the clinician\u{2019}s \
professional type and main field of practice, following standard U.S. healthcare taxonomy \
conventions.";

const LLAMA_SIC: &str = "You are an assistant writing a factual summary about an organization \
based on its name. Given the [ORG_NAME], your goal is to identify and describe the \
organization's main business activities, core functions, and the industry it operates in. Use \
only publicly verifiable information. The description should be informative, objective, and \
around 250\u{2013}300 words. Do not add any assumptions or speculative content.";

const LLAMA_HC: &str = "You are a research assistant writing a factual summary about a \
healthcare provider\u{2019}s specialty. Given the [PROVIDER_NAME], your goal is to identify and \
describe their medical specialty, professional focus, qualifications, and the healthcare sector \
they operate in. Use only publicly verifiable information. The description should be \
informative, objective, and around 250\u{2013}300 words. Do not add any assumptions or \
speculative content.";

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::GptSic,
        TemplateId::GptHc,
        TemplateId::LlamaSic,
        TemplateId::LlamaHc,
    ];

    pub fn for_task(task: TaskId, family: ModelFamily) -> Self {
        match (family, task) {
            (ModelFamily::Gpt, TaskId::Sic) => TemplateId::GptSic,
            (ModelFamily::Gpt, TaskId::Healthcare) => TemplateId::GptHc,
            (ModelFamily::Llama, TaskId::Sic) => TemplateId::LlamaSic,
            (ModelFamily::Llama, TaskId::Healthcare) => TemplateId::LlamaHc,
        }
    }

    pub fn task(self) -> TaskId {
        match self {
            TemplateId::GptSic | TemplateId::LlamaSic => TaskId::Sic,
            TemplateId::GptHc | TemplateId::LlamaHc => TaskId::Healthcare,
        }
    }

    pub fn family(self) -> ModelFamily {
        match self {
            TemplateId::GptSic | TemplateId::GptHc => ModelFamily::Gpt,
            TemplateId::LlamaSic | TemplateId::LlamaHc => ModelFamily::Llama,
        }
    }

    pub fn body(self) -> &'static str {
        match self {
            TemplateId::GptSic => GPT_SIC,
            TemplateId::GptHc => GPT_HC,
            TemplateId::LlamaSic => LLAMA_SIC,
            TemplateId::LlamaHc => LLAMA_HC,
        }
    }

    pub fn placeholder(self) -> &'static str {
        match self {
            TemplateId::GptSic | TemplateId::LlamaSic => "[ORG_NAME]",
            TemplateId::GptHc => "[Provider_NAME]",
            TemplateId::LlamaHc => "[PROVIDER_NAME]",
        }
    }

    /// Substitutes the raw entity name, unquoted and unmodified.
    pub fn render(self, entity_name: &str) -> String {
        self.body().replacen(self.placeholder(), entity_name, 1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::GptSic => "GPT_SIC",
            TemplateId::GptHc => "GPT_HC",
            TemplateId::LlamaSic => "LLAMA_SIC",
            TemplateId::LlamaHc => "LLAMA_HC",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown template {s:?}"))
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    sha256_hex(prompt.as_bytes())
}
