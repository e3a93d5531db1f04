//! Pure text operations: snippet aggregation, refusal detection, combination.

use super::types::{AcquiredText, Provenance, SearchResult, SourceKind, SourceParams};
use super::AcquisitionError;

pub const SNIPPET_SEPARATOR: &str = " ";
pub const COMBINED_SEPARATOR: &str = "\n\n";

/// Joins the snippets of the first `k` results with a single space, skipping
/// empty snippets. Duplicates are kept.
pub fn aggregate_snippets(results: &[SearchResult], k: usize) -> String {
    let joined = results
        .iter()
        .take(k)
        .map(|r| r.snippet.as_str())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(SNIPPET_SEPARATOR);
    joined.trim().to_string()
}

pub const DEFAULT_REFUSAL_PATTERNS: [&str; 4] =
    ["i don't have", "i do not have", "i'm sorry", "as an ai"];

/// Flags summaries that decline to describe the entity. Only the first 200
/// characters are inspected.
#[derive(Debug, Clone)]
pub struct RefusalDetector {
    patterns: Vec<String>,
}

impl Default for RefusalDetector {
    fn default() -> Self {
        Self::new(DEFAULT_REFUSAL_PATTERNS.iter().map(|s| s.to_string()))
    }
}

impl RefusalDetector {
    pub fn new(patterns: impl IntoIterator<Item = String>) -> Self {
        Self {
            patterns: patterns.into_iter().map(|p| normalize(&p)).collect(),
        }
    }

    pub fn with_extra(mut self, extra: impl IntoIterator<Item = String>) -> Self {
        self.patterns.extend(extra.into_iter().map(|p| normalize(&p)));
        self
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn detect(&self, text: &str) -> bool {
        let head: String = text.chars().take(200).collect();
        let head = normalize(&head);
        self.patterns.iter().any(|p| !p.is_empty() && head.contains(p.as_str()))
    }
}

pub fn detect_refusal(text: &str) -> bool {
    RefusalDetector::default().detect(text)
}

// Lowercases and folds typographic apostrophes so "I don’t" matches "i don't".
fn normalize(s: &str) -> String {
    s.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'")
}

/// Concatenates parts for one entity with a blank line between them. Empty
/// parts (refusals) contribute nothing, separator included.
pub fn combine_texts(parts: &[AcquiredText]) -> Result<AcquiredText, AcquisitionError> {
    if parts.len() < 2 {
        return Err(AcquisitionError::TooFewParts(parts.len()));
    }
    let entity_id = &parts[0].entity_id;
    if let Some(other) = parts.iter().find(|p| &p.entity_id != entity_id) {
        return Err(AcquisitionError::MixedEntities {
            first: entity_id.clone(),
            other: other.entity_id.clone(),
        });
    }
    let text = parts
        .iter()
        .map(|p| p.text.as_str())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(COMBINED_SEPARATOR);
    let components: Vec<String> = parts.iter().map(AcquiredText::signature).collect();
    let retrieved_at = parts.iter().map(|p| p.retrieved_at).max().expect("nonempty");
    Ok(AcquiredText {
        entity_id: entity_id.clone(),
        source: SourceKind::Combined,
        params: SourceParams::Combined {
            components: components.clone(),
        },
        text,
        retrieved_at,
        provenance: Provenance::Components(components),
        refusal: false,
    })
}

/// Cuts `text` after its last sentence terminator. Text without one is
/// returned unchanged.
pub fn truncate_at_sentence_boundary(text: &str) -> &str {
    let mut cut = None;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let next_is_boundary = chars.peek().is_none_or(|(_, n)| n.is_whitespace());
            if next_is_boundary {
                cut = Some(i + c.len_utf8());
            }
        }
    }
    match cut {
        Some(end) => text[..end].trim_end(),
        None => text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn results(snips: &[&str]) -> Vec<SearchResult> {
        snips
            .iter()
            .enumerate()
            .map(|(i, s)| SearchResult {
                rank: i as u32 + 1,
                title: format!("t{i}"),
                url: format!("https://example.com/{i}"),
                snippet: s.to_string(),
            })
            .collect()
    }

    fn text(entity: &str, source: SourceKind, body: &str, refusal: bool) -> AcquiredText {
        let params = match source {
            SourceKind::Gsnip => SourceParams::Snippets { k: 10 },
            _ => SourceParams::Summary {
                template: super::super::prompts::TemplateId::GptSic,
                model_id: "m".into(),
                max_tokens: 400,
            },
        };
        AcquiredText {
            entity_id: entity.into(),
            source,
            params,
            text: body.into(),
            retrieved_at: Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
            provenance: Provenance::PromptHash("h".into()),
            refusal,
        }
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_snippets(&results(&["A.", "B.", "C."]), 2), "A. B.");
        assert_eq!(aggregate_snippets(&results(&["A.", "", "C."]), 3), "A. C.");
        assert_eq!(aggregate_snippets(&[], 10), "");
    }

    #[test]
    fn refusal_examples() {
        assert!(detect_refusal(
            "I don\u{2019}t have current detailed information about that organization."
        ));
        assert!(!detect_refusal("Gold Hills Mining is a mineral exploration company ..."));
        assert!(!detect_refusal(""));
        let late = format!("{} I'm sorry", "x".repeat(250));
        assert!(!detect_refusal(&late));
    }

    #[test]
    fn refusal_patterns_extend() {
        let d = RefusalDetector::default().with_extra(["no information available".to_string()]);
        assert!(d.detect("No information available for this entity."));
        assert_eq!(d.patterns().len(), 5);
    }

    #[test]
    fn combine_examples() {
        let a = text("e1", SourceKind::Gsnip, "A", false);
        let b = text("e1", SourceKind::Gptsum, "B", false);
        let combined = combine_texts(&[a.clone(), b]).unwrap();
        assert_eq!(combined.text, "A\n\nB");
        assert_eq!(combined.signature(), "gsnip10+gptsum");

        let refused = text("e1", SourceKind::Gptsum, "", true);
        assert_eq!(combine_texts(&[a.clone(), refused]).unwrap().text, "A");

        let other = text("e2", SourceKind::Gptsum, "B", false);
        assert!(matches!(
            combine_texts(&[a.clone(), other]),
            Err(AcquisitionError::MixedEntities { .. })
        ));
        assert!(matches!(combine_texts(&[a]), Err(AcquisitionError::TooFewParts(1))));
    }

    #[test]
    fn truncation_keeps_whole_sentences() {
        assert_eq!(truncate_at_sentence_boundary("One. Two. Thr"), "One. Two.");
        assert_eq!(truncate_at_sentence_boundary("Ltd. is a firm"), "Ltd.");
        assert_eq!(truncate_at_sentence_boundary("no terminator"), "no terminator");
        assert_eq!(truncate_at_sentence_boundary("v1.2 ok"), "v1.2 ok");
    }

    proptest! {
        #[test]
        fn only_top_k_matter(snips in proptest::collection::vec("[a-z ]{0,12}", 0..15), k in 1usize..15) {
            let r = results(&snips.iter().map(String::as_str).collect::<Vec<_>>());
            let cut = &r[..k.min(r.len())];
            prop_assert_eq!(aggregate_snippets(&r, k), aggregate_snippets(cut, k));
        }

        #[test]
        fn smaller_k_is_prefix(snips in proptest::collection::vec("[a-z]{1,8}( [a-z]{1,8})?", 1..15), k in 1usize..15, kk in 1usize..15) {
            let r = results(&snips.iter().map(String::as_str).collect::<Vec<_>>());
            let (small, big) = (k.min(kk), k.max(kk));
            prop_assert!(aggregate_snippets(&r, big).starts_with(&aggregate_snippets(&r, small)));
        }

        #[test]
        fn combine_is_associative_in_effect(a in "[a-z]{1,10}", b in "[a-z]{1,10}", c in "[a-z]{1,10}") {
            let (ta, tb, tc) = (
                text("e", SourceKind::Gsnip, &a, false),
                text("e", SourceKind::Gptsum, &b, false),
                text("e", SourceKind::Llamasum, &c, false),
            );
            let flat = combine_texts(&[ta.clone(), tb.clone(), tc.clone()]).unwrap();
            let nested = combine_texts(&[combine_texts(&[ta, tb]).unwrap(), tc]).unwrap();
            prop_assert_eq!(flat.text, nested.text);
        }
    }
}
