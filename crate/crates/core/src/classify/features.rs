use std::collections::BTreeMap;
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::util::sha256_hex;

pub const DEFAULT_BUCKETS: u32 = 1 << 18;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturizerConfig {
    pub buckets: u32,
    pub bigrams: bool,
    /// Only the first `max_words` tokens are used when set.
    pub max_words: Option<usize>,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self {
            buckets: DEFAULT_BUCKETS,
            bigrams: true,
            max_words: None,
        }
    }
}

impl FeaturizerConfig {
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("featurizer config serializes"))
    }
}

/// Sparse vector with strictly increasing indices and positive values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl FeatureVector {
    /// Builds a vector from unsorted pairs, summing duplicates and dropping
    /// non-positive entries.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *acc.entry(i).or_insert(0.0) += v;
        }
        let (indices, values) = acc.into_iter().filter(|(_, v)| *v > 0.0).unzip();
        Self { indices, values }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: u32) -> Option<f64> {
        self.indices.binary_search(&index).ok().map(|i| self.values[i])
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn bucket_of(feature: &str, buckets: u32) -> u32 {
    let mut h = FnvHasher::default();
    h.write(feature.as_bytes());
    (h.finish() % u64::from(buckets)) as u32
}

pub fn featurize(text: &str) -> FeatureVector {
    featurize_with(text, &FeaturizerConfig::default())
}

pub fn featurize_with(text: &str, config: &FeaturizerConfig) -> FeatureVector {
    let mut tokens = tokenize(text);
    if let Some(cap) = config.max_words {
        tokens.truncate(cap);
    }
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for t in &tokens {
        *counts.entry(bucket_of(t, config.buckets)).or_insert(0.0) += 1.0;
    }
    if config.bigrams {
        for pair in tokens.windows(2) {
            let bigram = format!("{} {}", pair[0], pair[1]);
            *counts.entry(bucket_of(&bigram, config.buckets)).or_insert(0.0) += 1.0;
        }
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    let (indices, values) = counts.into_iter().map(|(i, c)| (i, c / norm)).unzip();
    FeatureVector { indices, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_gives_empty_vector() {
        assert!(featurize("").is_empty());
        assert!(featurize(" ,.; ").is_empty());
    }

    #[test]
    fn repeated_word_weights() {
        let v = featurize("gold gold");
        let uni = bucket_of("gold", DEFAULT_BUCKETS);
        let bi = bucket_of("gold gold", DEFAULT_BUCKETS);
        // hand-computed: counts (2, 1), norm sqrt(5)
        assert!((v.get(uni).unwrap() - 0.894_427_190_999_916).abs() < 1e-12);
        assert!((v.get(bi).unwrap() - 0.447_213_595_499_958).abs() < 1e-12);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn case_and_punctuation_folded() {
        assert_eq!(featurize("Gold, HILLS!"), featurize("gold hills"));
    }

    #[test]
    fn word_cap_truncates() {
        let cfg = FeaturizerConfig { max_words: Some(1), ..Default::default() };
        assert_eq!(featurize_with("alpha beta gamma", &cfg), featurize("alpha"));
    }

    #[test]
    fn config_hash_tracks_fields() {
        let a = FeaturizerConfig::default();
        let b = FeaturizerConfig { bigrams: false, ..Default::default() };
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), FeaturizerConfig::default().hash());
    }

    proptest! {
        #[test]
        fn vector_invariants(text in "\\PC{0,80}") {
            let v = featurize(&text);
            prop_assert!(v.indices().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(v.values().iter().all(|x| *x > 0.0));
            prop_assert!(v.indices().iter().all(|i| *i < DEFAULT_BUCKETS));
            if !v.is_empty() {
                let n: f64 = v.values().iter().map(|x| x * x).sum();
                prop_assert!((n - 1.0).abs() < 1e-12);
            }
            prop_assert_eq!(featurize(&text), v);
        }
    }
}
