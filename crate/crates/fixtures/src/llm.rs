use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::server::{MockServer, Stats};

/// A chat request as seen by the mock.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub model: String,
    /// (role, content) pairs.
    pub messages: Vec<(String, String)>,
    pub max_tokens: Option<u64>,
}

impl LlmRequest {
    pub fn last_user(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|(r, _)| r == "user")
            .map_or("", |(_, c)| c.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LlmReply {
    Text { content: String, finish_reason: String },
    /// `content: null` in the response.
    Null,
    Status(u16),
}

impl LlmReply {
    pub fn text(content: impl Into<String>) -> Self {
        LlmReply::Text {
            content: content.into(),
            finish_reason: "stop".into(),
        }
    }

    pub fn truncated(content: impl Into<String>) -> Self {
        LlmReply::Text {
            content: content.into(),
            finish_reason: "length".into(),
        }
    }
}

pub type Responder = Arc<dyn Fn(&LlmRequest) -> LlmReply + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FineTuneBehavior {
    /// Jobs succeed with this model id.
    Succeed { model: String },
    /// Jobs are created, then report `failed` with this message.
    Fail { message: String },
    /// Creation itself returns a `failed` job.
    FailOnCreate { message: String },
}

#[derive(Clone)]
pub struct LlmConfig {
    pub responder: Responder,
    pub api_key: String,
    pub fail_first: usize,
    pub fail_status: u16,
    pub delay: Duration,
    pub fine_tune: FineTuneBehavior,
}

impl LlmConfig {
    pub fn new(responder: impl Fn(&LlmRequest) -> LlmReply + Send + Sync + 'static) -> Self {
        Self {
            responder: Arc::new(responder),
            api_key: "test-llm-key".into(),
            fail_first: 0,
            fail_status: 503,
            delay: Duration::ZERO,
            fine_tune: FineTuneBehavior::Succeed {
                model: "ft:mock-model:entclass:1".into(),
            },
        }
    }

    /// Always answers with `content`.
    pub fn constant(content: &str) -> Self {
        let content = content.to_string();
        Self::new(move |_| LlmReply::text(content.clone()))
    }
}

struct LlmState {
    config: LlmConfig,
    stats: Arc<Stats>,
    requests: Mutex<Vec<LlmRequest>>,
    uploads: Mutex<Vec<Vec<u8>>>,
    jobs: AtomicUsize,
    job_bodies: Mutex<Vec<Value>>,
}

/// Handle to the LLM mock, with access to what it received.
pub struct LlmMock {
    pub server: MockServer,
    state: Arc<LlmState>,
}

impl LlmMock {
    pub fn url(&self) -> &str {
        self.server.url()
    }

    pub fn requests(&self) -> Vec<LlmRequest> {
        self.state.requests.lock().unwrap().clone()
    }

    pub fn uploads(&self) -> Vec<Vec<u8>> {
        self.state.uploads.lock().unwrap().clone()
    }

    pub fn job_requests(&self) -> Vec<Value> {
        self.state.job_bodies.lock().unwrap().clone()
    }

    pub fn stats(&self) -> &Stats {
        self.server.stats()
    }
}

pub fn spawn_llm(config: LlmConfig) -> LlmMock {
    let stats = Arc::new(Stats::default());
    let state = Arc::new(LlmState {
        config,
        stats: stats.clone(),
        requests: Mutex::new(Vec::new()),
        uploads: Mutex::new(Vec::new()),
        jobs: AtomicUsize::new(0),
        job_bodies: Mutex::new(Vec::new()),
    });
    let router = Router::new()
        .route("/chat/completions", post(chat))
        .route("/files", post(upload))
        .route("/fine_tuning/jobs", post(create_job))
        .route("/fine_tuning/jobs/{id}", get(job_status))
        .with_state(state.clone());
    LlmMock {
        server: MockServer::spawn(router, stats),
        state,
    }
}

fn error(code: u16, message: &str) -> Response {
    let code = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (code, Json(json!({ "error": { "message": message } }))).into_response()
}

fn authorized(s: &LlmState, headers: &HeaderMap) -> bool {
    let want = format!("Bearer {}", s.config.api_key);
    headers.get("authorization").and_then(|v| v.to_str().ok()) == Some(want.as_str())
}

/// Shared preamble: accounting, delay, auth and injected failures.
async fn gate(s: &LlmState, path: &str, headers: &HeaderMap) -> Option<Response> {
    let (n, _guard) = s.stats.enter(path);
    if !s.config.delay.is_zero() {
        tokio::time::sleep(s.config.delay).await;
    }
    if !authorized(s, headers) {
        return Some(error(401, "invalid api key"));
    }
    if n <= s.config.fail_first {
        return Some(error(s.config.fail_status, "injected failure"));
    }
    None
}

async fn chat(State(s): State<Arc<LlmState>>, headers: HeaderMap, body: Bytes) -> Response {
    if let Some(r) = gate(&s, "/chat/completions", &headers).await {
        return r;
    }
    let Ok(v) = serde_json::from_slice::<Value>(&body) else {
        return error(400, "body is not JSON");
    };
    let messages = v["messages"]
        .as_array()
        .map(|ms| {
            ms.iter()
                .map(|m| {
                    (
                        m["role"].as_str().unwrap_or_default().to_string(),
                        m["content"].as_str().unwrap_or_default().to_string(),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    let request = LlmRequest {
        model: v["model"].as_str().unwrap_or_default().to_string(),
        messages,
        max_tokens: v["max_tokens"].as_u64(),
    };
    let reply = (s.config.responder)(&request);
    s.requests.lock().unwrap().push(request.clone());
    let (content, finish) = match reply {
        LlmReply::Status(code) => return error(code, "responder failure"),
        LlmReply::Null => (Value::Null, "stop".to_string()),
        LlmReply::Text { content, finish_reason } => (Value::String(content), finish_reason),
    };
    Json(json!({
        "id": "chatcmpl-mock",
        "object": "chat.completion",
        "model": request.model,
        "choices": [{
            "index": 0,
            "message": { "role": "assistant", "content": content },
            "finish_reason": finish,
        }],
    }))
    .into_response()
}

async fn upload(State(s): State<Arc<LlmState>>, headers: HeaderMap, body: Bytes) -> Response {
    if let Some(r) = gate(&s, "/files", &headers).await {
        return r;
    }
    let mut uploads = s.uploads.lock().unwrap();
    uploads.push(body.to_vec());
    Json(json!({ "id": format!("file-{}", uploads.len()), "object": "file", "purpose": "fine-tune" }))
        .into_response()
}

async fn create_job(State(s): State<Arc<LlmState>>, headers: HeaderMap, body: Bytes) -> Response {
    if let Some(r) = gate(&s, "/fine_tuning/jobs", &headers).await {
        return r;
    }
    let v: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    s.job_bodies.lock().unwrap().push(v.clone());
    let n = s.jobs.fetch_add(1, Ordering::SeqCst) + 1;
    let id = format!("ftjob-{n}");
    let job = match &s.config.fine_tune {
        FineTuneBehavior::FailOnCreate { message } => {
            json!({ "id": id, "status": "failed", "error": { "message": message } })
        }
        _ => json!({ "id": id, "status": "validating_files", "model": v["model"] }),
    };
    Json(job).into_response()
}

async fn job_status(State(s): State<Arc<LlmState>>, headers: HeaderMap, Path(id): Path<String>) -> Response {
    if let Some(r) = gate(&s, "/fine_tuning/jobs/{id}", &headers).await {
        return r;
    }
    let job = match &s.config.fine_tune {
        FineTuneBehavior::Succeed { model } => {
            json!({ "id": id, "status": "succeeded", "fine_tuned_model": model })
        }
        FineTuneBehavior::Fail { message } | FineTuneBehavior::FailOnCreate { message } => {
            json!({ "id": id, "status": "failed", "fine_tuned_model": null, "error": { "message": message } })
        }
    };
    Json(job).into_response()
}
