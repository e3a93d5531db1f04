use std::collections::{BTreeMap, BTreeSet};

use super::prediction::PredictedLabel;
use crate::taxonomy::{TaskId, TaxonomyScheme};

/// What a code looks like inside free text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeShape {
    /// Standalone two-digit numbers.
    TwoDigit,
    /// Category slugs, or 10-character provider codes mapped to a category.
    Healthcare,
}

impl CodeShape {
    pub fn for_task(task: TaskId) -> Self {
        match task {
            TaskId::Sic => CodeShape::TwoDigit,
            TaskId::Healthcare => CodeShape::Healthcare,
        }
    }
}

/// Maps LLM completions onto a fixed set of category ids.
#[derive(Debug, Clone)]
pub struct ResponseParser {
    valid: BTreeSet<String>,
    shape: CodeShape,
    // uppercase raw code -> category id
    raw_codes: BTreeMap<String, String>,
}

impl ResponseParser {
    pub fn new<I, S>(valid_ids: I, shape: CodeShape) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            valid: valid_ids.into_iter().map(Into::into).collect(),
            shape,
            raw_codes: BTreeMap::new(),
        }
    }

    pub fn for_scheme(scheme: &TaxonomyScheme) -> Self {
        let mut parser = Self::new(scheme.ids(), CodeShape::for_task(scheme.task()));
        for (code, &idx) in scheme.code_map() {
            parser
                .raw_codes
                .insert(code.to_ascii_uppercase(), scheme.categories()[idx].id.clone());
        }
        parser
    }

    pub fn valid_ids(&self) -> &BTreeSet<String> {
        &self.valid
    }

    /// The category id named by `text`, if any. The whole trimmed response is
    /// tried first, then tokens from left to right.
    pub fn parse(&self, text: &str) -> Option<&str> {
        let trimmed = text.trim();
        if let Some(id) = self.valid.get(trimmed) {
            return Some(id);
        }
        match self.shape {
            CodeShape::TwoDigit => text
                .split(|c: char| !c.is_alphanumeric())
                .filter(|t| t.len() == 2 && t.bytes().all(|b| b.is_ascii_digit()))
                .find_map(|t| self.valid.get(t).map(String::as_str)),
            CodeShape::Healthcare => text
                .split(|c: char| !(c.is_alphanumeric() || c == '-'))
                .map(|t| t.trim_matches('-'))
                .filter(|t| !t.is_empty())
                .find_map(|t| self.healthcare_token(t)),
        }
    }

    fn healthcare_token(&self, token: &str) -> Option<&str> {
        if let Some(id) = self.valid.get(&token.to_lowercase()) {
            return Some(id);
        }
        if token.chars().count() == 10 {
            let code = token.to_ascii_uppercase();
            if let Some(id) = self.raw_codes.get(&code) {
                return self.valid.get(id).map(String::as_str);
            }
        }
        None
    }
}

/// Parses a completion against `scheme`; anything unrecognized is INVALID.
pub fn parse_code_response(text: &str, scheme: &TaxonomyScheme) -> PredictedLabel {
    parse_with(&ResponseParser::for_scheme(scheme), text, scheme)
}

pub(crate) fn parse_with(parser: &ResponseParser, text: &str, scheme: &TaxonomyScheme) -> PredictedLabel {
    match parser.parse(text).and_then(|id| scheme.get(id)) {
        Some(label) => PredictedLabel::Category(label.clone()),
        None => PredictedLabel::Invalid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sic_ids() -> ResponseParser {
        ResponseParser::new(["07", "10", "20", "65"], CodeShape::TwoDigit)
    }

    #[test]
    fn exact_after_trim() {
        assert_eq!(sic_ids().parse(" 07\n"), Some("07"));
    }

    #[test]
    fn first_embedded_code() {
        assert_eq!(sic_ids().parse("SIC 20 (Real Estate)"), Some("20"));
        assert_eq!(sic_ids().parse("The code is 20."), Some("20"));
        assert_eq!(sic_ids().parse("99 or 65, maybe 10"), Some("65"));
    }

    #[test]
    fn longer_numbers_not_split() {
        assert_eq!(sic_ids().parse("2024 revenue grew"), None);
        assert_eq!(sic_ids().parse("SIC20"), None);
        assert_eq!(sic_ids().parse("unknown"), None);
    }

    #[test]
    fn scheme_level_results() {
        let sic = TaxonomyScheme::sic();
        assert_eq!(parse_code_response("The code is 20.", &sic).id(), Some("20"));
        assert!(parse_code_response("unknown", &sic).is_invalid());
        let hc = TaxonomyScheme::healthcare();
        assert_eq!(parse_code_response("Dental-Providers.", &hc).id(), Some("dental-providers"));
        assert_eq!(
            parse_code_response("Taxonomy 207RC0000X fits", &hc).id(),
            Some("allopathic-osteopathic-physicians")
        );
        assert!(parse_code_response("207RC0000", &hc).is_invalid());
    }

    proptest! {
        #[test]
        fn result_is_valid_or_invalid(text in "\\PC{0,60}", digits in 0u32..100) {
            let scheme = TaxonomyScheme::sic();
            let ids = scheme.ids();
            for t in [text.clone(), format!("{text} {digits:02} {text}")] {
                match parse_code_response(&t, &scheme) {
                    PredictedLabel::Category(c) => prop_assert!(ids.contains(&c.id)),
                    PredictedLabel::Invalid => {}
                }
            }
        }
    }
}
