use serde::{Deserialize, Serialize};

use super::metrics::{macro_report, mean, predicted_index, ratio, ConfusionMatrix};
use super::EvalError;
use crate::classify::Prediction;
use crate::taxonomy::{CategoryLabel, TaxonomyScheme};

/// How a confidence is compared with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Keep when confidence > threshold.
    #[default]
    Exceeds,
    /// Keep when confidence >= threshold.
    AtLeast,
}

impl ThresholdRule {
    pub fn keeps(self, confidence: f64, threshold: f64) -> bool {
        match self {
            ThresholdRule::Exceeds => confidence > threshold,
            ThresholdRule::AtLeast => confidence >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub coverage: f64,
    pub n_labeled: usize,
}

/// 0.60 to 0.85 in steps of 0.05.
pub fn default_thresholds() -> Vec<f64> {
    (0..6).map(|i| f64::from(60 + 5 * i) / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub gold: usize,
    /// `None` for INVALID.
    pub pred: Option<usize>,
    pub confidence: f64,
}

pub fn kept_indices(pairs: &[ScoredPair], threshold: f64, rule: ThresholdRule) -> Vec<usize> {
    (0..pairs.len())
        .filter(|&i| rule.keeps(pairs[i].confidence, threshold))
        .collect()
}

fn check_thresholds(thresholds: &[f64]) -> Result<(), EvalError> {
    match thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        Some(&t) => Err(EvalError::InvalidThreshold(t)),
        None => Ok(()),
    }
}

/// Sweep over index-encoded pairs. Precision is macro precision over the kept
/// pairs; recall divides by the full gold support, so abstentions count as
/// misses.
pub fn sweep_pairs(
    classes: &[String],
    pairs: &[ScoredPair],
    thresholds: &[f64],
    rule: ThresholdRule,
) -> Result<Vec<ThresholdPoint>, EvalError> {
    check_thresholds(thresholds)?;
    let c = classes.len();
    let mut support = vec![0u64; c];
    for p in pairs {
        if p.gold >= c {
            return Err(EvalError::UnknownGold(p.gold.to_string()));
        }
        support[p.gold] += 1;
    }
    let mut out = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let kept = kept_indices(pairs, t, rule);
        let golds: Vec<usize> = kept.iter().map(|&i| pairs[i].gold).collect();
        let preds: Vec<Option<usize>> = kept.iter().map(|&i| pairs[i].pred).collect();
        let m = ConfusionMatrix::from_indices(classes.to_vec(), &golds, &preds)?;
        let precision = if kept.is_empty() { 0.0 } else { macro_report(&m).macro_p };
        let recall = mean((0..c).map(|k| ratio(m.counts[k][k], support[k])));
        out.push(ThresholdPoint {
            threshold: t,
            precision,
            recall,
            coverage: ratio(kept.len() as u64, pairs.len() as u64),
            n_labeled: kept.len(),
        });
    }
    Ok(out)
}

/// Sweep over positionally aligned predictions and golds. Every prediction
/// needs a confidence.
pub fn threshold_sweep(
    predictions: &[Prediction],
    golds: &[CategoryLabel],
    scheme: &TaxonomyScheme,
    thresholds: &[f64],
    rule: ThresholdRule,
) -> Result<Vec<ThresholdPoint>, EvalError> {
    if predictions.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            golds: golds.len(),
            preds: predictions.len(),
        });
    }
    let mut pairs = Vec::with_capacity(golds.len());
    for (p, g) in predictions.iter().zip(golds) {
        let confidence = p
            .confidence
            .ok_or_else(|| EvalError::MissingConfidence(p.entity_id.clone()))?;
        let gold = scheme
            .index_of(&g.id)
            .ok_or_else(|| EvalError::UnknownGold(g.id.clone()))?;
        pairs.push(ScoredPair {
            gold,
            pred: predicted_index(scheme, &p.label),
            confidence,
        });
    }
    sweep_pairs(&scheme.ids(), &pairs, thresholds, rule)
}
