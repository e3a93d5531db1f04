use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use chrono::Utc;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::cache::{Cache, CacheKey};
use super::http::RetryPolicy;
use super::llm::LlmClient;
use super::prompts::{ModelFamily, TemplateId};
use super::search::SearchClient;
use super::summary::{generate_summary, DEFAULT_SUMMARY_MAX_TOKENS};
use super::text::{aggregate_snippets, combine_texts, RefusalDetector};
use super::types::{AcquiredText, Provenance, SourceKind, SourceParams, SourceSpec};
use super::AcquisitionError;
use crate::taxonomy::TaskId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionConfig {
    pub top_k: usize,
    pub max_parallel: usize,
    pub requests_per_second: Option<u32>,
    pub retry: RetryPolicy,
    pub cache_dir: PathBuf,
    pub summary_max_tokens: u32,
    /// Appended to the default refusal phrases.
    pub extra_refusal_patterns: Vec<String>,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            top_k: 10,
            max_parallel: 4,
            requests_per_second: None,
            retry: RetryPolicy::default(),
            cache_dir: PathBuf::from("cache"),
            summary_max_tokens: DEFAULT_SUMMARY_MAX_TOKENS,
            extra_refusal_patterns: Vec::new(),
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if self.top_k == 0 {
            return Err(AcquisitionError::InvalidInput("top_k must be at least 1".into()));
        }
        if self.max_parallel == 0 {
            return Err(AcquisitionError::InvalidInput("max_parallel must be at least 1".into()));
        }
        Ok(())
    }

    pub fn refusal_detector(&self) -> RefusalDetector {
        RefusalDetector::default().with_extra(self.extra_refusal_patterns.iter().cloned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CacheMode {
    /// Serve hits from cache, fetch and persist misses.
    #[default]
    ReadWrite,
    /// Always fetch and overwrite.
    Refresh,
    /// Never touch the network; a miss is an error.
    Offline,
}

#[derive(Debug, Default)]
struct Counters {
    fetched: AtomicUsize,
    cache_hits: AtomicUsize,
    refusals: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AcquireStats {
    pub fetched: usize,
    pub cache_hits: usize,
    pub refusals: usize,
}

/// Cache-fronted dispatcher over the search and summary providers.
#[derive(Debug)]
pub struct Acquirer {
    task: TaskId,
    cache: Arc<Cache>,
    mode: CacheMode,
    max_parallel: usize,
    summary_max_tokens: u32,
    detector: RefusalDetector,
    search: Option<SearchClient>,
    llms: BTreeMap<ModelFamily, LlmClient>,
    // model ids are part of summary cache keys, so they are known even
    // when no client is configured (offline builds)
    summary_models: BTreeMap<ModelFamily, String>,
    counters: Counters,
}

impl Acquirer {
    pub fn new(task: TaskId, cache: Arc<Cache>, config: &AcquisitionConfig) -> Self {
        Self {
            task,
            cache,
            mode: CacheMode::ReadWrite,
            max_parallel: config.max_parallel.max(1),
            summary_max_tokens: config.summary_max_tokens,
            detector: config.refusal_detector(),
            search: None,
            llms: BTreeMap::new(),
            summary_models: BTreeMap::new(),
            counters: Counters::default(),
        }
    }

    pub fn with_mode(mut self, mode: CacheMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_search(mut self, client: SearchClient) -> Self {
        self.search = Some(client);
        self
    }

    pub fn with_llm(mut self, family: ModelFamily, client: LlmClient) -> Self {
        self.summary_models.insert(family, client.model().to_string());
        self.llms.insert(family, client);
        self
    }

    /// Registers the model id used for `family` without a client, for
    /// cache-only lookups.
    pub fn with_summary_model(mut self, family: ModelFamily, model_id: impl Into<String>) -> Self {
        self.summary_models.insert(family, model_id.into());
        self
    }

    pub fn task(&self) -> TaskId {
        self.task
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    pub fn stats(&self) -> AcquireStats {
        AcquireStats {
            fetched: self.counters.fetched.load(Ordering::Relaxed),
            cache_hits: self.counters.cache_hits.load(Ordering::Relaxed),
            refusals: self.counters.refusals.load(Ordering::Relaxed),
        }
    }

    fn summary_params(&self, family: ModelFamily) -> Result<SourceParams, AcquisitionError> {
        let model_id = self
            .summary_models
            .get(&family)
            .ok_or(AcquisitionError::ClientUnavailable(match family {
                ModelFamily::Gpt => "gpt summary",
                ModelFamily::Llama => "llama summary",
            }))?;
        Ok(SourceParams::Summary {
            template: TemplateId::for_task(self.task, family),
            model_id: model_id.clone(),
            max_tokens: self.summary_max_tokens,
        })
    }

    /// Cache key for a leaf spec.
    pub fn key_for(&self, entity_id: &str, spec: &SourceSpec) -> Result<CacheKey, AcquisitionError> {
        let (source, params) = match spec {
            SourceSpec::Gsnip { k } => (SourceKind::Gsnip, SourceParams::Snippets { k: *k }),
            SourceSpec::Summary(family) => (SourceKind::for_family(*family), self.summary_params(*family)?),
            SourceSpec::Combined(_) => {
                return Err(AcquisitionError::InvalidInput(
                    "combined sources are not cached as a unit".into(),
                ))
            }
        };
        Ok(CacheKey::new(self.task, entity_id, source, &params))
    }

    /// Returns the text for one entity and source, from cache when possible.
    pub async fn acquire(
        &self,
        entity_id: &str,
        name: &str,
        spec: &SourceSpec,
    ) -> Result<AcquiredText, AcquisitionError> {
        if let SourceSpec::Combined(parts) = spec {
            let mut texts = Vec::with_capacity(parts.len());
            for part in parts {
                texts.push(Box::pin(self.acquire(entity_id, name, part)).await?);
            }
            return combine_texts(&texts);
        }

        let key = self.key_for(entity_id, spec)?;
        if self.mode != CacheMode::Refresh {
            if let Some(hit) = self.cache.load(&key)? {
                self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(hit);
            }
        }
        if self.mode == CacheMode::Offline {
            return Err(AcquisitionError::NotCached {
                entity_id: entity_id.to_string(),
                signature: spec.signature(),
            });
        }

        let text = self.fetch(entity_id, name, spec).await?;
        self.cache.store(self.task, &key, &text)?;
        self.counters.fetched.fetch_add(1, Ordering::Relaxed);
        if text.refusal {
            self.counters.refusals.fetch_add(1, Ordering::Relaxed);
        }
        Ok(text)
    }

    async fn fetch(
        &self,
        entity_id: &str,
        name: &str,
        spec: &SourceSpec,
    ) -> Result<AcquiredText, AcquisitionError> {
        match spec {
            SourceSpec::Gsnip { k } => {
                let client = self
                    .search
                    .as_ref()
                    .ok_or(AcquisitionError::ClientUnavailable("search"))?;
                let results = client.search(name, *k).await?;
                Ok(AcquiredText {
                    entity_id: entity_id.to_string(),
                    source: SourceKind::Gsnip,
                    params: SourceParams::Snippets { k: *k },
                    text: aggregate_snippets(&results, *k),
                    retrieved_at: Utc::now(),
                    provenance: Provenance::SearchResults(results),
                    refusal: false,
                })
            }
            SourceSpec::Summary(family) => {
                let client = self.llms.get(family).ok_or(AcquisitionError::ClientUnavailable(
                    match family {
                        ModelFamily::Gpt => "gpt summary",
                        ModelFamily::Llama => "llama summary",
                    },
                ))?;
                let template = TemplateId::for_task(self.task, *family);
                generate_summary(
                    entity_id,
                    name,
                    template,
                    client,
                    self.summary_max_tokens,
                    &self.detector,
                )
                .await
            }
            SourceSpec::Combined(_) => unreachable!("combined specs are resolved by acquire"),
        }
    }

    /// Acquires `spec` for every `(entity_id, name)` pair with at most
    /// `max_parallel` entities in progress. Results come back in input order.
    pub async fn acquire_many(
        &self,
        entities: &[(String, String)],
        spec: &SourceSpec,
    ) -> Vec<(String, Result<AcquiredText, AcquisitionError>)> {
        let mut out: Vec<(usize, String, Result<AcquiredText, AcquisitionError>)> =
            stream::iter(entities.iter().enumerate())
                .map(|(i, (id, name))| async move { (i, id.clone(), self.acquire(id, name, spec).await) })
                .buffer_unordered(self.max_parallel)
                .collect()
                .await;
        out.sort_by_key(|(i, _, _)| *i);
        out.into_iter().map(|(_, id, r)| (id, r)).collect()
    }
}
