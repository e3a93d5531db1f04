//! Text acquisition: search-snippet retrieval and LLM summaries, with
//! caching, bounded parallelism, rate limiting and combination.

mod acquire;
mod cache;
mod http;
mod llm;
mod prompts;
mod search;
mod summary;
mod text;
mod types;

use std::path::PathBuf;

use thiserror::Error;

pub use acquire::{AcquireStats, Acquirer, AcquisitionConfig, CacheMode};
pub use cache::{Cache, CacheKey, IndexEntry, INDEX_FILE};
pub use http::{RequestGate, RetryPolicy};
pub use llm::{ChatMessage, Completion, LlmClient, Role, LLM_API_KEY_ENV};
pub use prompts::{prompt_hash, ModelFamily, TemplateId};
pub use search::{SearchClient, SEARCH_API_KEY_ENV};
pub use summary::{generate_summary, DEFAULT_SUMMARY_MAX_TOKENS};
pub use text::{
    aggregate_snippets, combine_texts, detect_refusal, truncate_at_sentence_boundary,
    RefusalDetector, COMBINED_SEPARATOR, DEFAULT_REFUSAL_PATTERNS, SNIPPET_SEPARATOR,
};
pub use types::{AcquiredText, Provenance, SearchResult, SourceKind, SourceParams, SourceSpec};

#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error("request failed after {attempts} attempt(s): {message}")]
    Http {
        status: Option<u16>,
        attempts: u32,
        message: String,
    },
    #[error("provider rejected credentials (HTTP {status})")]
    Auth { status: u16 },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("provider returned an empty completion")]
    EmptyCompletion,
    #[error("environment variable {0} is not set")]
    MissingCredential(&'static str),
    #[error("no {0} client configured")]
    ClientUnavailable(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cache file {} is corrupt: {message}", path.display())]
    CacheCorrupt { path: PathBuf, message: String },
    #[error("{signature} text for {entity_id:?} is not cached")]
    NotCached { entity_id: String, signature: String },
    #[error("combining needs at least two parts, got {0}")]
    TooFewParts(usize),
    #[error("cannot combine texts of {first:?} and {other:?}")]
    MixedEntities { first: String, other: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AcquisitionError {
    /// Failures that talking to a provider again might fix.
    pub fn is_network(&self) -> bool {
        matches!(
            self,
            AcquisitionError::Http { .. }
                | AcquisitionError::Auth { .. }
                | AcquisitionError::MalformedResponse(_)
                | AcquisitionError::EmptyCompletion
        )
    }
}
