use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::classify::PredictedLabel;
use crate::taxonomy::{CategoryLabel, TaxonomyScheme};

/// Gold-by-predicted counts. Row `g` column `p` counts gold class `g`
/// predicted as `p`; the last column counts INVALID predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let c = classes.len();
        Self {
            classes,
            counts: vec![vec![0; c + 1]; c],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn invalid_column(&self) -> usize {
        self.classes.len()
    }

    /// Tallies index pairs; `None` predictions go to the INVALID column.
    pub fn from_indices(classes: Vec<String>, golds: &[usize], preds: &[Option<usize>]) -> Result<Self, EvalError> {
        if golds.len() != preds.len() {
            return Err(EvalError::LengthMismatch {
                golds: golds.len(),
                preds: preds.len(),
            });
        }
        let mut m = Self::new(classes);
        let c = m.n_classes();
        for (&g, p) in golds.iter().zip(preds) {
            if g >= c {
                return Err(EvalError::UnknownGold(g.to_string()));
            }
            let col = p.filter(|&p| p < c).unwrap_or(c);
            m.counts[g][col] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn invalid_count(&self) -> u64 {
        self.counts.iter().map(|row| row[self.invalid_column()]).sum()
    }
}

/// Index of `label` in `scheme`, or `None` for INVALID and unknown ids.
pub fn predicted_index(scheme: &TaxonomyScheme, label: &PredictedLabel) -> Option<usize> {
    label.id().and_then(|id| scheme.index_of(id))
}

pub fn confusion(
    golds: &[CategoryLabel],
    preds: &[PredictedLabel],
    scheme: &TaxonomyScheme,
) -> Result<ConfusionMatrix, EvalError> {
    if golds.len() != preds.len() {
        return Err(EvalError::LengthMismatch {
            golds: golds.len(),
            preds: preds.len(),
        });
    }
    let gold_idx = golds
        .iter()
        .map(|g| scheme.index_of(&g.id).ok_or_else(|| EvalError::UnknownGold(g.id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let pred_idx: Vec<Option<usize>> = preds.iter().map(|p| predicted_index(scheme, p)).collect();
    ConfusionMatrix::from_indices(scheme.ids(), &gold_idx, &pred_idx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_p: f64,
    pub macro_r: f64,
    pub macro_f1: f64,
}

impl MacroReport {
    pub fn labels(&self) -> Vec<&str> {
        self.per_class.iter().map(|c| c.label.as_str()).collect()
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub(crate) fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

/// Per-class and macro-averaged precision, recall and F1. Every class counts
/// in the means, including ones with no gold and no predictions.
pub fn macro_report(m: &ConfusionMatrix) -> MacroReport {
    let c = m.n_classes();
    let per_class: Vec<ClassMetrics> = (0..c)
        .map(|k| {
            let tp = m.counts[k][k];
            let support: u64 = m.counts[k].iter().sum();
            let predicted: u64 = (0..c).map(|g| m.counts[g][k]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            ClassMetrics {
                label: m.classes[k].clone(),
                precision,
                recall,
                f1: f1(precision, recall),
                support,
            }
        })
        .collect();
    MacroReport {
        macro_p: mean(per_class.iter().map(|x| x.precision)),
        macro_r: mean(per_class.iter().map(|x| x.recall)),
        macro_f1: mean(per_class.iter().map(|x| x.f1)),
        per_class,
    }
}
