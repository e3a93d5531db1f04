//! Metrics, threshold sweeps, per-category comparison and snippet-count
//! ablation.

mod ablation;
mod metrics;
mod report;
mod sweep;

use thiserror::Error;

use crate::acquisition::AcquisitionError;
use crate::classify::ClassifyError;

pub use ablation::{
    ablate_snippets, evaluate_predictions, snippet_pools_from_cache, train_and_evaluate, AblationResult,
    NativeRun, SnippetPool, DEFAULT_ABLATION_KS,
};
pub use metrics::{confusion, macro_report, predicted_index, ClassMetrics, ConfusionMatrix, MacroReport};
pub use report::{
    per_category_table, read_sweep_csv, write_ablation_csv, write_per_category_csv, write_sweep_csv,
    CategoryRow, EvalReport,
};
pub use sweep::{
    default_thresholds, kept_indices, sweep_pairs, threshold_sweep, ScoredPair, ThresholdPoint,
    ThresholdRule,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{golds} gold labels but {preds} predictions")]
    LengthMismatch { golds: usize, preds: usize },
    #[error("gold label {0:?} is not in the scheme")]
    UnknownGold(String),
    #[error("prediction for {0:?} is not in the dataset")]
    UnknownEntity(String),
    #[error("prediction for {0:?} has no confidence; sweeps need native-model predictions")]
    MissingConfidence(String),
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("reports are over different schemes")]
    SchemeMismatch,
    #[error("{entity_id:?} has {available} cached snippets, need {k}")]
    InsufficientSnippets {
        entity_id: String,
        k: usize,
        available: usize,
    },
    #[error("snippet counts must be positive and nonempty, got {0:?}")]
    InvalidKs(Vec<usize>),
    #[error("bad report file: {0}")]
    Format(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
