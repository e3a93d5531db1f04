use std::path::Path;
use std::time::Duration;

use reqwest::multipart::{Form, Part};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::parse::{parse_with, ResponseParser};
use super::prediction::Prediction;
use super::ClassifyError;
use crate::acquisition::{AcquisitionError, LlmClient};
use crate::corpus::ChatFineTuneRecord;
use crate::taxonomy::TaxonomyScheme;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineTuneJob {
    pub id: String,
    pub status: String,
    #[serde(default)]
    pub fine_tuned_model: Option<String>,
    #[serde(default)]
    pub error: Option<serde_json::Value>,
}

impl FineTuneJob {
    pub fn is_failed(&self) -> bool {
        matches!(self.status.as_str(), "failed" | "cancelled")
    }

    pub fn is_succeeded(&self) -> bool {
        self.status == "succeeded"
    }

    fn failure(&self) -> ClassifyError {
        ClassifyError::JobFailed {
            job_id: self.id.clone(),
            status: self.status.clone(),
            message: self
                .error
                .as_ref()
                .map(|e| e.get("message").and_then(|m| m.as_str()).map_or_else(|| e.to_string(), str::to_string))
                .unwrap_or_default(),
        }
    }
}

#[derive(Deserialize)]
struct UploadedFile {
    id: String,
}

/// Fine-tuning calls on an OpenAI-compatible provider, reusing the chat
/// client's endpoint, credentials and request gate.
#[derive(Debug, Clone)]
pub struct FineTuneClient {
    llm: LlmClient,
    poll_interval: Duration,
}

impl FineTuneClient {
    pub fn new(llm: LlmClient) -> Self {
        Self {
            llm,
            poll_interval: Duration::from_secs(10),
        }
    }

    pub fn with_poll_interval(mut self, interval: Duration) -> Self {
        self.poll_interval = interval;
        self
    }

    pub fn llm(&self) -> &LlmClient {
        &self.llm
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{path}", self.llm.base_url())
    }

    fn parse<T: for<'de> Deserialize<'de>>(body: &str, what: &str) -> Result<T, ClassifyError> {
        serde_json::from_str(body)
            .map_err(|e| AcquisitionError::MalformedResponse(format!("{what}: {e}")).into())
    }

    /// Uploads a chat fine-tune file and returns the provider file id.
    pub async fn upload_file(&self, path: &Path) -> Result<String, ClassifyError> {
        let bytes = std::fs::read(path)?;
        let file_name = path
            .file_name()
            .map_or_else(|| "data.jsonl".to_string(), |n| n.to_string_lossy().into_owned());
        let url = self.url("files");
        let body = self
            .llm
            .gate()
            .send_text(|| {
                let part = Part::bytes(bytes.clone()).file_name(file_name.clone());
                let form = Form::new().text("purpose", "fine-tune").part("file", part);
                self.llm
                    .http()
                    .post(&url)
                    .bearer_auth(self.llm.api_key())
                    .multipart(form)
            })
            .await?;
        Ok(Self::parse::<UploadedFile>(&body, "file upload")?.id)
    }

    /// Uploads the training (and optional validation) file and creates a job
    /// on the client's model. Returns the provider job id.
    pub async fn submit(&self, train_file: &Path, dev_file: Option<&Path>) -> Result<String, ClassifyError> {
        let training_file = self.upload_file(train_file).await?;
        let mut request = json!({ "model": self.llm.model(), "training_file": training_file });
        if let Some(dev) = dev_file {
            request["validation_file"] = json!(self.upload_file(dev).await?);
        }
        let url = self.url("fine_tuning/jobs");
        let body = self
            .llm
            .gate()
            .send_text(|| {
                self.llm
                    .http()
                    .post(&url)
                    .bearer_auth(self.llm.api_key())
                    .json(&request)
            })
            .await?;
        let job: FineTuneJob = Self::parse(&body, "job creation")?;
        if job.is_failed() {
            return Err(job.failure());
        }
        Ok(job.id)
    }

    pub async fn status(&self, job_id: &str) -> Result<FineTuneJob, ClassifyError> {
        let url = self.url(&format!("fine_tuning/jobs/{job_id}"));
        let body = self
            .llm
            .gate()
            .send_text(|| self.llm.http().get(&url).bearer_auth(self.llm.api_key()))
            .await?;
        Self::parse(&body, "job status")
    }

    /// Polls until the job finishes and returns the fine-tuned model id.
    pub async fn wait_for_model(&self, job_id: &str, max_polls: usize) -> Result<String, ClassifyError> {
        for poll in 0..max_polls.max(1) {
            if poll > 0 {
                tokio::time::sleep(self.poll_interval).await;
            }
            let job = self.status(job_id).await?;
            if job.is_failed() {
                return Err(job.failure());
            }
            if job.is_succeeded() {
                return job.fine_tuned_model.clone().ok_or_else(|| {
                    AcquisitionError::MalformedResponse("succeeded job without fine_tuned_model".into()).into()
                });
            }
        }
        Err(ClassifyError::JobFailed {
            job_id: job_id.to_string(),
            status: "timeout".into(),
            message: format!("not finished after {max_polls} polls"),
        })
    }

    /// Sends the system and user turns of `record` to `model_id` and parses
    /// the reply.
    pub async fn infer(
        &self,
        model_id: &str,
        entity_id: &str,
        record: &ChatFineTuneRecord,
        scheme: &TaxonomyScheme,
    ) -> Result<Prediction, ClassifyError> {
        remote_infer(&self.llm, model_id, entity_id, record, scheme).await
    }
}

pub async fn remote_finetune_submit(
    client: &FineTuneClient,
    train_file: &Path,
    dev_file: Option<&Path>,
) -> Result<String, ClassifyError> {
    client.submit(train_file, dev_file).await
}

pub async fn remote_infer(
    llm: &LlmClient,
    model_id: &str,
    entity_id: &str,
    record: &ChatFineTuneRecord,
    scheme: &TaxonomyScheme,
) -> Result<Prediction, ClassifyError> {
    let completion = llm
        .chat_with_model(model_id, record.prompt_messages(), Some(super::baseline::BASELINE_MAX_TOKENS))
        .await?;
    let parser = ResponseParser::for_scheme(scheme);
    Ok(Prediction::unscored(entity_id, parse_with(&parser, &completion.content, scheme)))
}
