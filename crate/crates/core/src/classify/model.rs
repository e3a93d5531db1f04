use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{featurize_with, FeatureVector, FeaturizerConfig};
use super::prediction::{PredictedLabel, Prediction};
use super::train::TrainingSummary;
use super::ClassifyError;
use crate::taxonomy::{CategoryLabel, TaxonomyScheme};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Linear softmax classifier over hashed features.
///
/// Weights are stored by feature column; a column absent from `weights` is
/// all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    pub format_version: u32,
    pub classes: Vec<CategoryLabel>,
    pub scheme_fingerprint: String,
    pub featurizer: FeaturizerConfig,
    pub featurizer_hash: String,
    pub weights: BTreeMap<u32, Vec<f64>>,
    pub bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingSummary>,
}

impl SoftmaxModel {
    /// Zero model: every input maps to the uniform distribution.
    pub fn zeros(scheme: &TaxonomyScheme, featurizer: FeaturizerConfig) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            classes: scheme.categories().to_vec(),
            scheme_fingerprint: scheme.fingerprint(),
            featurizer_hash: featurizer.hash(),
            featurizer,
            weights: BTreeMap::new(),
            bias: vec![0.0; scheme.len()],
            training: None,
        }
    }

    /// Zero model with `n_classes` unnamed classes, for tests on raw vectors.
    pub fn zeros_raw(n_classes: usize, featurizer: FeaturizerConfig) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            classes: (0..n_classes)
                .map(|i| CategoryLabel {
                    id: i.to_string(),
                    display_name: format!("class {i}"),
                })
                .collect(),
            scheme_fingerprint: String::new(),
            featurizer_hash: featurizer.hash(),
            featurizer,
            weights: BTreeMap::new(),
            bias: vec![0.0; n_classes],
            training: None,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn weight(&self, class: usize, feature: u32) -> f64 {
        self.weights.get(&feature).map_or(0.0, |col| col[class])
    }

    pub fn set_weight(&mut self, class: usize, feature: u32, value: f64) {
        let c = self.n_classes();
        self.weights.entry(feature).or_insert_with(|| vec![0.0; c])[class] = value;
    }

    pub fn logits(&self, x: &FeatureVector) -> Vec<f64> {
        let mut z = self.bias.clone();
        for (j, xj) in x.iter() {
            if let Some(col) = self.weights.get(&j) {
                for (zc, w) in z.iter_mut().zip(col) {
                    *zc += w * xj;
                }
            }
        }
        z
    }

    pub fn probabilities(&self, x: &FeatureVector) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn featurize(&self, text: &str) -> FeatureVector {
        featurize_with(text, &self.featurizer)
    }

    pub fn predict(&self, entity_id: &str, text: &str) -> Prediction {
        let scores = self.probabilities(&self.featurize(text));
        let best = argmax(&scores);
        Prediction {
            entity_id: entity_id.to_string(),
            label: PredictedLabel::Category(self.classes[best].clone()),
            confidence: Some(scores[best]),
            scores: Some(scores),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.bias.iter().all(|b| b.is_finite())
            && self.weights.values().flatten().all(|w| w.is_finite())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifyError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Loads a model and checks it was trained for `scheme`.
    pub fn load(path: impl AsRef<Path>, scheme: &TaxonomyScheme) -> Result<Self, ClassifyError> {
        let bytes = std::fs::read(path)?;
        let model: SoftmaxModel =
            serde_json::from_slice(&bytes).map_err(|e| ClassifyError::ModelFormat(e.to_string()))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifyError::ModelFormat(format!(
                "unsupported format version {}",
                model.format_version
            )));
        }
        if model.scheme_fingerprint != scheme.fingerprint() {
            return Err(ClassifyError::SchemeMismatch {
                expected: scheme.fingerprint(),
                found: model.scheme_fingerprint,
            });
        }
        if model.featurizer_hash != model.featurizer.hash() {
            return Err(ClassifyError::ModelFormat("featurizer hash does not match its config".into()));
        }
        let c = model.n_classes();
        if model.classes.len() != c || model.weights.values().any(|col| col.len() != c) {
            return Err(ClassifyError::ModelFormat("inconsistent class count".into()));
        }
        Ok(model)
    }
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Gradient of the mean cross-entropy, stored sparsely by feature column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradient {
    pub weights: BTreeMap<u32, Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Mean cross-entropy over `batch` and its exact gradient. Weight decay is
/// not part of the loss.
pub fn loss_and_grad(model: &SoftmaxModel, batch: &[(&FeatureVector, usize)]) -> (f64, Gradient) {
    assert!(!batch.is_empty(), "loss_and_grad needs a nonempty batch");
    let c = model.n_classes();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = Gradient {
        weights: BTreeMap::new(),
        bias: vec![0.0; c],
    };
    for (x, y) in batch {
        let p = model.probabilities(x);
        loss -= p[*y].ln();
        let mut delta = p;
        delta[*y] -= 1.0;
        for (gb, d) in grad.bias.iter_mut().zip(&delta) {
            *gb += d * scale;
        }
        for (j, xj) in x.iter() {
            let col = grad.weights.entry(j).or_insert_with(|| vec![0.0; c]);
            for (g, d) in col.iter_mut().zip(&delta) {
                *g += d * xj * scale;
            }
        }
    }
    (loss * scale, grad)
}

/// Mean cross-entropy over `examples`, accumulated in chunks of `chunk`.
pub fn mean_loss(model: &SoftmaxModel, examples: &[(&FeatureVector, usize)], chunk: usize) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for part in examples.chunks(chunk.max(1)) {
        total += part
            .iter()
            .map(|(x, y)| -model.probabilities(x)[*y].ln())
            .sum::<f64>();
    }
    total / examples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> FeaturizerConfig {
        FeaturizerConfig { buckets: 50, ..Default::default() }
    }

    #[test]
    fn zero_model_is_uniform() {
        let scheme = TaxonomyScheme::sic();
        let m = SoftmaxModel::zeros(&scheme, FeaturizerConfig::default());
        let p = m.predict("e", "anything at all");
        let scores = p.scores.unwrap();
        assert!(scores.iter().all(|s| (s - 1.0 / 27.0).abs() < 1e-15));
        assert_eq!(p.label.id(), Some("10"));
    }

    #[test]
    fn uniform_loss_is_log_c() {
        let m = SoftmaxModel::zeros_raw(5, small_cfg());
        let x = FeatureVector::from_pairs([(3, 1.0)]);
        let (loss, _) = loss_and_grad(&m, &[(&x, 2)]);
        assert!((loss - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn duplicated_batch_same_gradient() {
        let mut m = SoftmaxModel::zeros_raw(3, small_cfg());
        m.set_weight(1, 4, 0.3);
        m.bias[2] = -0.2;
        let x = FeatureVector::from_pairs([(4, 0.6), (7, 0.8)]);
        let (l1, g1) = loss_and_grad(&m, &[(&x, 0)]);
        let (l2, g2) = loss_and_grad(&m, &[(&x, 0), (&x, 0)]);
        assert!((l1 - l2).abs() < 1e-15);
        for (j, col) in &g1.weights {
            for (a, b) in col.iter().zip(&g2.weights[j]) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    // central differences on random C=3, D=50 models
    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut m = SoftmaxModel::zeros_raw(3, small_cfg());
            for j in 0..50u32 {
                for c in 0..3 {
                    m.set_weight(c, j, rng.random_range(-1.0..1.0));
                }
            }
            for b in m.bias.iter_mut() {
                *b = rng.random_range(-1.0..1.0);
            }
            let xs: Vec<FeatureVector> = (0..4)
                .map(|_| FeatureVector::from_pairs((0..6).map(|_| (rng.random_range(0..50u32), rng.random_range(0.1..1.0)))))
                .collect();
            let batch: Vec<(&FeatureVector, usize)> = xs.iter().map(|x| (x, rng.random_range(0..3usize))).collect();
            let (_, g) = loss_and_grad(&m, &batch);
            let h = 1e-5;
            for j in 0..50u32 {
                for c in 0..3 {
                    let w = m.weight(c, j);
                    m.set_weight(c, j, w + h);
                    let up = mean_loss(&m, &batch, 16);
                    m.set_weight(c, j, w - h);
                    let down = mean_loss(&m, &batch, 16);
                    m.set_weight(c, j, w);
                    let numeric = (up - down) / (2.0 * h);
                    let analytic = g.weights.get(&j).map_or(0.0, |col| col[c]);
                    assert!((analytic - numeric).abs() / (analytic.abs() + 1e-8) < 1e-4 || (analytic - numeric).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5, 0.1]), 1);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
    }

    #[test]
    fn save_load_rejects_other_scheme() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut m = SoftmaxModel::zeros(&TaxonomyScheme::sic(), FeaturizerConfig::default());
        m.set_weight(3, 17, 0.125);
        m.save(&path).unwrap();
        assert_eq!(SoftmaxModel::load(&path, &TaxonomyScheme::sic()).unwrap(), m);
        assert!(matches!(
            SoftmaxModel::load(&path, &TaxonomyScheme::healthcare()),
            Err(ClassifyError::SchemeMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_shift_invariant(
            z in proptest::collection::vec(-30.0f64..30.0, 2..30),
            shift in -50.0f64..50.0,
        ) {
            let p = softmax(&z);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| *v >= 0.0));
            let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert_eq!(argmax(&p), argmax(&q));
        }
    }
}
