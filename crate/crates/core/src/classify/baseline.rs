use super::parse::{parse_with, ResponseParser};
use super::prediction::Prediction;
use super::ClassifyError;
use crate::acquisition::{AcquiredText, ChatMessage, LlmClient};
use crate::taxonomy::{TaskId, TaxonomyScheme};

const BASELINE_TEMPLATE: &str = "You are a classification assistant for [TASK_NAME]. \
Given the [ENTITY_NAME] below, predict the [CODE_TYPE] that best represents its \
[CATEGORY_DESCRIPTION]. Choose ONLY one code from the provided options: [CODE_LIST]. \
Return ONLY the code. Do not include explanations or extra text.";

/// Upper bound on completion length; a bare code needs only a few tokens.
pub const BASELINE_MAX_TOKENS: u32 = 32;

struct Vocabulary {
    task_name: &'static str,
    entity_name: &'static str,
    entity_line: &'static str,
    code_type: &'static str,
    category_description: &'static str,
}

fn vocabulary(task: TaskId) -> Vocabulary {
    match task {
        TaskId::Sic => Vocabulary {
            task_name: "Standard Industrial Classification (SIC) of organizations",
            entity_name: "organization",
            entity_line: "Organization",
            code_type: "two-digit SIC major group code",
            category_description: "primary line of business",
        },
        TaskId::Healthcare => Vocabulary {
            task_name: "healthcare provider taxonomy classification",
            entity_name: "healthcare provider",
            entity_line: "Provider",
            code_type: "provider category id",
            category_description: "provider type",
        },
    }
}

/// Renders the baseline prompt. With `context`, the acquired description
/// follows the entity name.
pub fn baseline_prompt(scheme: &TaxonomyScheme, name: &str, context: Option<&str>) -> String {
    let v = vocabulary(scheme.task());
    let mut prompt = BASELINE_TEMPLATE
        .replace("[TASK_NAME]", v.task_name)
        .replace("[ENTITY_NAME]", v.entity_name)
        .replace("[CODE_TYPE]", v.code_type)
        .replace("[CATEGORY_DESCRIPTION]", v.category_description)
        .replace("[CODE_LIST]", &scheme.ids().join(", "));
    prompt.push_str("\n\n");
    prompt.push_str(v.entity_line);
    prompt.push_str(": ");
    prompt.push_str(name);
    if let Some(text) = context.map(str::trim).filter(|t| !t.is_empty()) {
        prompt.push_str("\nDescription: ");
        prompt.push_str(text);
    }
    prompt
}

/// Asks `llm` for a code directly. The prediction carries no confidence.
pub async fn prompt_baseline(
    entity_id: &str,
    name: &str,
    context: Option<&AcquiredText>,
    scheme: &TaxonomyScheme,
    llm: &LlmClient,
) -> Result<Prediction, ClassifyError> {
    let prompt = baseline_prompt(scheme, name, context.map(|c| c.text.as_str()));
    let completion = llm
        .chat(&[ChatMessage::user(prompt)], Some(BASELINE_MAX_TOKENS))
        .await?;
    let parser = ResponseParser::for_scheme(scheme);
    Ok(Prediction::unscored(entity_id, parse_with(&parser, &completion.content, scheme)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_context_prompt() {
        let p = baseline_prompt(&TaxonomyScheme::sic(), "Gold Hills Mining, Ltd.", None);
        assert!(p.contains("Choose ONLY one code from the provided options: 10, 13, 20,"));
        assert!(p.contains("Return ONLY the code. Do not include explanations or extra text."));
        assert!(p.ends_with("\n\nOrganization: Gold Hills Mining, Ltd."));
        assert!(!p.contains('['));
    }

    #[test]
    fn context_prompt() {
        let p = baseline_prompt(&TaxonomyScheme::healthcare(), "Smile Dental", Some(" A dental clinic. "));
        assert!(p.ends_with("Provider: Smile Dental\nDescription: A dental clinic."));
        let blank = baseline_prompt(&TaxonomyScheme::healthcare(), "Smile Dental", Some(""));
        assert!(!blank.contains("Description"));
    }
}
