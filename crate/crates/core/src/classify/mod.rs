//! Classifier backends: a native hashed-feature softmax model, a prompting
//! baseline and a remote fine-tuned model, plus completion parsing.

mod baseline;
mod features;
mod model;
mod optim;
mod parse;
mod prediction;
mod remote;
mod train;

use thiserror::Error;

use crate::acquisition::AcquisitionError;

pub use baseline::{baseline_prompt, prompt_baseline, BASELINE_MAX_TOKENS};
pub use features::{
    bucket_of, featurize, featurize_with, tokenize, FeatureVector, FeaturizerConfig, DEFAULT_BUCKETS,
};
pub use model::{argmax, loss_and_grad, mean_loss, softmax, Gradient, SoftmaxModel, MODEL_FORMAT_VERSION};
pub use optim::{adamw_update, AdamWConfig, StepParams, WarmupSchedule};
pub use parse::{parse_code_response, CodeShape, ResponseParser};
pub use prediction::{PredictedLabel, Prediction, INVALID_LABEL};
pub use remote::{remote_finetune_submit, remote_infer, FineTuneClient, FineTuneJob};
pub use train::{train, train_vectors, TrainConfig, TrainingSummary};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("instance {0:?} has no gold label")]
    MissingGold(String),
    #[error("label {label:?} of {entity_id:?} is not in the scheme")]
    UnknownLabel { entity_id: String, label: String },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model was trained for scheme {found}, expected {expected}")]
    SchemeMismatch { expected: String, found: String },
    #[error("bad model file: {0}")]
    ModelFormat(String),
    #[error("fine-tune job {job_id} ended with status {status}: {message}")]
    JobFailed {
        job_id: String,
        status: String,
        message: String,
    },
    #[error(transparent)]
    Provider(#[from] AcquisitionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Predicts every instance with the native model, keeping input order.
pub fn predict_instances(
    model: &SoftmaxModel,
    instances: &[crate::corpus::ClassificationInstance],
) -> Vec<Prediction> {
    instances
        .iter()
        .map(|i| model.predict(&i.entity_id, &i.input_text))
        .collect()
}
