use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::server::{MockServer, Stats};

/// Behavior of the mock search provider at `GET {url}/search`.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Organic results by query string, in provider shape.
    pub results: BTreeMap<String, Vec<Value>>,
    pub api_key: String,
    /// The first `fail_first` requests get `fail_status`.
    pub fail_first: usize,
    pub fail_status: u16,
    /// Queries that always get `fail_status`.
    pub failing_queries: BTreeSet<String>,
    /// Queries answered without an `organic_results` field.
    pub omit_results_for: BTreeSet<String>,
    pub delay: Duration,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            results: BTreeMap::new(),
            api_key: "test-search-key".into(),
            fail_first: 0,
            fail_status: 503,
            failing_queries: BTreeSet::new(),
            omit_results_for: BTreeSet::new(),
            delay: Duration::ZERO,
        }
    }
}

struct SearchState {
    config: SearchConfig,
    stats: Arc<Stats>,
}

pub fn spawn_search(config: SearchConfig) -> MockServer {
    let stats = Arc::new(Stats::default());
    let state = Arc::new(SearchState {
        config,
        stats: stats.clone(),
    });
    let router = Router::new().route("/search", get(search)).with_state(state);
    MockServer::spawn(router, stats)
}

fn status(code: u16, message: &str) -> Response {
    let code = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (code, Json(json!({ "error": message }))).into_response()
}

async fn search(State(s): State<Arc<SearchState>>, Query(q): Query<HashMap<String, String>>) -> Response {
    let (n, _guard) = s.stats.enter("/search");
    let c = &s.config;
    if !c.delay.is_zero() {
        tokio::time::sleep(c.delay).await;
    }
    if q.get("api_key") != Some(&c.api_key) {
        return status(401, "Invalid API key");
    }
    if n <= c.fail_first {
        return status(c.fail_status, "injected failure");
    }
    let query = q.get("q").cloned().unwrap_or_default();
    if c.failing_queries.contains(&query) {
        return status(c.fail_status, "injected failure");
    }
    let num: usize = q.get("num").and_then(|v| v.parse().ok()).unwrap_or(10);
    let mut body = json!({
        "search_metadata": { "status": "Success" },
        "search_parameters": { "q": query, "num": num },
    });
    if !c.omit_results_for.contains(&query) {
        let results: Vec<Value> = c
            .results
            .get(&query)
            .map(|r| r.iter().take(num).cloned().collect())
            .unwrap_or_default();
        body["organic_results"] = Value::Array(results);
    }
    Json(body).into_response()
}
