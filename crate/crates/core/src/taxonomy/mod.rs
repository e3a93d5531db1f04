//! Tasks, label spaces, dataset ingestion and deterministic splitting.

mod dataset;
mod scheme;

pub use dataset::{
    split_dataset, Dataset, EntityRecord, LoadOptions, Split, SplitCounts, SplitRatios,
};
pub use scheme::{
    sic_prefix, CategoryLabel, TaskId, TaxonomyScheme, HEALTHCARE_CATEGORY_COUNT,
    SIC_CATEGORY_COUNT,
};


use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("malformed {task} code {code:?}")]
    MalformedCode { task: TaskId, code: String },
    #[error("SIC code {code:?} has prefix {prefix:?}, which is not a scheme category")]
    UnknownCategory { code: String, prefix: String },
    #[error("taxonomy code {0:?} is not in the code table")]
    UnknownCode(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("row {row}: {source}")]
    InvalidRow {
        row: usize,
        #[source]
        source: Box<TaxonomyError>,
    },
    #[error("row {row}: label column says {given:?} but code resolves to {derived:?}")]
    LabelMismatch {
        row: usize,
        given: String,
        derived: String,
    },
    #[error("row {row}: duplicate entity_id {entity_id:?}")]
    DuplicateEntity { row: usize, entity_id: String },
    #[error("{with_split} of {total} rows carry a split; either all or none must")]
    MixedSplits { with_split: usize, total: usize },
    #[error("split ratios {0:?} must be positive and sum to 1")]
    BadRatios([f64; 3]),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
