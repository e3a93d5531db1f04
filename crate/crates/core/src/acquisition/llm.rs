use serde::{Deserialize, Serialize};
use serde_json::json;

use super::http::RequestGate;
use super::AcquisitionError;

pub const LLM_API_KEY_ENV: &str = "LLM_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// Field order is part of the chat file format: `role` then `content`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub content: String,
    pub finish_reason: Option<String>,
}

impl Completion {
    pub fn was_truncated(&self) -> bool {
        self.finish_reason.as_deref() == Some("length")
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Chat-completions client (`POST {base_url}/chat/completions`).
#[derive(Debug, Clone)]
pub struct LlmClient {
    http: reqwest::Client,
    base_url: String,
    api_key: String,
    model: String,
    gate: RequestGate,
}

impl LlmClient {
    pub fn new(
        base_url: impl Into<String>,
        api_key: impl Into<String>,
        model: impl Into<String>,
        gate: RequestGate,
    ) -> Self {
        Self {
            http: reqwest::Client::new(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model: model.into(),
            gate,
        }
    }

    pub fn from_env(
        base_url: impl Into<String>,
        model: impl Into<String>,
        gate: RequestGate,
    ) -> Result<Self, AcquisitionError> {
        let key = std::env::var(LLM_API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or(AcquisitionError::MissingCredential(LLM_API_KEY_ENV))?;
        Ok(Self::new(base_url, key, model, gate))
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub(crate) fn http(&self) -> &reqwest::Client {
        &self.http
    }

    pub(crate) fn api_key(&self) -> &str {
        &self.api_key
    }

    pub(crate) fn gate(&self) -> &RequestGate {
        &self.gate
    }

    pub async fn chat(
        &self,
        messages: &[ChatMessage],
        max_tokens: Option<u32>,
    ) -> Result<Completion, AcquisitionError> {
        self.chat_with_model(&self.model, messages, max_tokens).await
    }

    pub async fn chat_with_model(
        &self,
        model: &str,
        messages: &[ChatMessage],
        max_tokens: Option<u32>,
    ) -> Result<Completion, AcquisitionError> {
        let mut body = json!({ "model": model, "messages": messages });
        if let Some(n) = max_tokens {
            body["max_tokens"] = json!(n);
        }
        let url = format!("{}/chat/completions", self.base_url);
        let text = self
            .gate
            .send_text(|| self.http.post(&url).bearer_auth(&self.api_key).json(&body))
            .await?;
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| AcquisitionError::MalformedResponse(format!("chat response: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| AcquisitionError::MalformedResponse("no choices".into()))?;
        Ok(Completion {
            content: choice.message.content.unwrap_or_default(),
            finish_reason: choice.finish_reason,
        })
    }
}
