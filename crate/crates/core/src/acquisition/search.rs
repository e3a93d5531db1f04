use serde::Deserialize;

use super::http::RequestGate;
use super::types::SearchResult;
use super::AcquisitionError;

pub const SEARCH_API_KEY_ENV: &str = "SEARCH_API_KEY";

/// Client for an organic-results search endpoint:
/// `GET {base_url}?q=<name>&num=<k>&api_key=<key>`.
#[derive(Debug, Clone)]
pub struct SearchClient {
    http: reqwest::Client,
    base_url: String,
    api_key: String,
    gate: RequestGate,
}

#[derive(Debug, Deserialize)]
struct SearchResponse {
    #[serde(default)]
    organic_results: Option<Vec<OrganicResult>>,
}

#[derive(Debug, Deserialize)]
struct OrganicResult {
    #[serde(default)]
    title: String,
    #[serde(default)]
    link: String,
    #[serde(default)]
    snippet: String,
    #[serde(default)]
    position: Option<u32>,
}

impl SearchClient {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, gate: RequestGate) -> Self {
        Self {
            http: reqwest::Client::new(),
            base_url: base_url.into(),
            api_key: api_key.into(),
            gate,
        }
    }

    pub fn from_env(base_url: impl Into<String>, gate: RequestGate) -> Result<Self, AcquisitionError> {
        let key = std::env::var(SEARCH_API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or(AcquisitionError::MissingCredential(SEARCH_API_KEY_ENV))?;
        Ok(Self::new(base_url, key, gate))
    }

    /// Queries the entity name as-is (no quoting) and returns at most `top_k`
    /// results in provider rank order. Fewer results is not an error.
    pub async fn search(&self, name: &str, top_k: usize) -> Result<Vec<SearchResult>, AcquisitionError> {
        if name.trim().is_empty() {
            return Err(AcquisitionError::InvalidInput("empty entity name".into()));
        }
        let num = top_k.to_string();
        let body = self
            .gate
            .send_text(|| {
                self.http.get(&self.base_url).query(&[
                    ("q", name),
                    ("num", num.as_str()),
                    ("api_key", self.api_key.as_str()),
                ])
            })
            .await?;
        parse_search_response(&body, top_k)
    }
}

fn parse_search_response(body: &str, top_k: usize) -> Result<Vec<SearchResult>, AcquisitionError> {
    let parsed: SearchResponse = serde_json::from_str(body)
        .map_err(|e| AcquisitionError::MalformedResponse(format!("search response: {e}")))?;
    let mut results = Vec::new();
    for (i, item) in parsed.organic_results.unwrap_or_default().into_iter().enumerate() {
        let rank = item.position.unwrap_or(i as u32 + 1);
        if let Some(prev) = results.last().map(|r: &SearchResult| r.rank) {
            if rank <= prev {
                return Err(AcquisitionError::MalformedResponse(format!(
                    "result positions not increasing ({prev} then {rank})"
                )));
            }
        }
        results.push(SearchResult {
            rank,
            title: item.title,
            url: item.link,
            snippet: item.snippet,
        });
    }
    results.truncate(top_k);
    Ok(results)
}
