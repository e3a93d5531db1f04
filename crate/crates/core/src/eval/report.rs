use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ablation::AblationResult;
use super::metrics::{ConfusionMatrix, MacroReport};
use super::sweep::ThresholdPoint;
use super::EvalError;
use crate::taxonomy::TaxonomyScheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run_id: String,
    pub config_fingerprint: String,
    #[serde(flatten)]
    pub report: MacroReport,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| EvalError::Format(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: String,
    pub name: String,
    pub f1_a: f64,
    pub f1_b: f64,
    pub delta: f64,
}

/// Per-category F1 of two reports over the same scheme, in scheme order.
/// `delta` is `f1_b - f1_a`.
pub fn per_category_table(
    scheme: &TaxonomyScheme,
    a: &MacroReport,
    b: &MacroReport,
) -> Result<Vec<CategoryRow>, EvalError> {
    let ids = scheme.ids();
    for r in [a, b] {
        if r.labels() != ids.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(EvalError::SchemeMismatch);
        }
    }
    Ok(scheme
        .categories()
        .iter()
        .zip(a.per_class.iter().zip(&b.per_class))
        .map(|(cat, (x, y))| CategoryRow {
            category: cat.id.clone(),
            name: cat.display_name.clone(),
            f1_a: x.f1,
            f1_b: y.f1,
            delta: y.f1 - x.f1,
        })
        .collect())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), EvalError> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_per_category_csv(path: impl AsRef<Path>, rows: &[CategoryRow]) -> Result<(), EvalError> {
    write_csv(path.as_ref(), rows)
}

/// Columns: threshold, precision, recall, coverage, n_labeled.
pub fn write_sweep_csv(path: impl AsRef<Path>, points: &[ThresholdPoint]) -> Result<(), EvalError> {
    if points.is_empty() {
        let mut f = std::fs::File::create(path)?;
        f.write_all(b"threshold,precision,recall,coverage,n_labeled\n")?;
        return Ok(());
    }
    write_csv(path.as_ref(), points)
}

pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<Vec<ThresholdPoint>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}

#[derive(Serialize)]
struct AblationRow {
    k: usize,
    macro_p: f64,
    macro_r: f64,
    macro_f1: f64,
}

/// Columns: k, macro_p, macro_r, macro_f1.
pub fn write_ablation_csv(path: impl AsRef<Path>, results: &[AblationResult]) -> Result<(), EvalError> {
    let rows: Vec<AblationRow> = results
        .iter()
        .map(|r| AblationRow {
            k: r.k,
            macro_p: r.report.macro_p,
            macro_r: r.report.macro_r,
            macro_f1: r.report.macro_f1,
        })
        .collect();
    write_csv(path.as_ref(), &rows)
}
