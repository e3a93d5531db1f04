use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::taxonomy::CategoryLabel;

pub const INVALID_LABEL: &str = "INVALID";

/// A predicted category, or the reserved label for responses that could not
/// be parsed into one. Serialized as the category object or the string
/// `"INVALID"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictedLabel {
    Category(CategoryLabel),
    Invalid,
}

impl PredictedLabel {
    pub fn id(&self) -> Option<&str> {
        match self {
            PredictedLabel::Category(c) => Some(&c.id),
            PredictedLabel::Invalid => None,
        }
    }

    pub fn as_str(&self) -> &str {
        self.id().unwrap_or(INVALID_LABEL)
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, PredictedLabel::Invalid)
    }
}

impl Serialize for PredictedLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PredictedLabel::Category(c) => c.serialize(s),
            PredictedLabel::Invalid => s.serialize_str(INVALID_LABEL),
        }
    }
}

impl<'de> Deserialize<'de> for PredictedLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Str(String),
            Category(CategoryLabel),
        }
        match Repr::deserialize(d)? {
            Repr::Category(c) => Ok(PredictedLabel::Category(c)),
            Repr::Str(s) if s == INVALID_LABEL => Ok(PredictedLabel::Invalid),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("unexpected label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub entity_id: String,
    pub label: PredictedLabel,
    /// Probability of `label`; remote backends leave this empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl Prediction {
    pub fn unscored(entity_id: impl Into<String>, label: PredictedLabel) -> Self {
        Self {
            entity_id: entity_id.into(),
            label,
            confidence: None,
            scores: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_serialization() {
        let p = Prediction::unscored("e1", PredictedLabel::Invalid);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"entity_id":"e1","label":"INVALID"}"#);
        assert_eq!(serde_json::from_str::<Prediction>(&s).unwrap(), p);

        let c = PredictedLabel::Category(CategoryLabel {
            id: "20".into(),
            display_name: "Food and Kindred Products".into(),
        });
        let back: PredictedLabel = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<PredictedLabel>("\"20\"").is_err());
    }
}
