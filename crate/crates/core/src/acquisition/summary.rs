use chrono::Utc;

use super::llm::{ChatMessage, LlmClient};
use super::prompts::{prompt_hash, TemplateId};
use super::text::{truncate_at_sentence_boundary, RefusalDetector};
use super::types::{AcquiredText, Provenance, SourceKind, SourceParams};
use super::AcquisitionError;

pub const DEFAULT_SUMMARY_MAX_TOKENS: u32 = 400;

/// Requests a task-specific summary of `name`.
///
/// Completions cut off by the token cap are trimmed back to the last full
/// sentence. Refusals are kept as empty text with `refusal` set.
pub async fn generate_summary(
    entity_id: &str,
    name: &str,
    template: TemplateId,
    llm: &LlmClient,
    max_tokens: u32,
    detector: &RefusalDetector,
) -> Result<AcquiredText, AcquisitionError> {
    let prompt = template.render(name);
    let completion = llm.chat(&[ChatMessage::user(prompt.as_str())], Some(max_tokens)).await?;
    let raw = completion.content.trim();
    if raw.is_empty() {
        return Err(AcquisitionError::EmptyCompletion);
    }
    let body = if completion.was_truncated() {
        truncate_at_sentence_boundary(raw)
    } else {
        raw
    };
    let refusal = detector.detect(body);
    Ok(AcquiredText {
        entity_id: entity_id.to_string(),
        source: SourceKind::for_family(template.family()),
        params: SourceParams::Summary {
            template,
            model_id: llm.model().to_string(),
            max_tokens,
        },
        text: if refusal { String::new() } else { body.to_string() },
        retrieved_at: Utc::now(),
        provenance: Provenance::PromptHash(prompt_hash(&prompt)),
        refusal,
    })
}
