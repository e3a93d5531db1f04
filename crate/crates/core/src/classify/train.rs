use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize_with, FeatureVector, FeaturizerConfig};
use super::model::{loss_and_grad, mean_loss, SoftmaxModel};
use super::optim::{adamw_update, AdamWConfig, StepParams, WarmupSchedule};
use super::ClassifyError;
use crate::corpus::ClassificationInstance;
use crate::taxonomy::TaxonomyScheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_batch_size: usize,
    pub learning_rate: f64,
    pub warmup_steps: u64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub featurizer: FeaturizerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamWConfig::default();
        Self {
            epochs: 3,
            batch_size: 8,
            eval_batch_size: 16,
            learning_rate: adam.learning_rate,
            warmup_steps: 500,
            weight_decay: adam.weight_decay,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 0,
            featurizer: FeaturizerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::InvalidConfig(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 || self.eval_batch_size == 0 {
            return bad("epochs and batch sizes must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and nonnegative");
        }
        if !(0.0..1.0).contains(&self.weight_decay) {
            return bad("weight_decay must be in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return bad("betas must be in [0, 1) and epsilon positive");
        }
        if self.featurizer.buckets == 0 {
            return bad("featurizer needs at least one bucket");
        }
        Ok(())
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn steps_per_epoch(&self, n: usize) -> u64 {
        n.div_ceil(self.batch_size) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub examples: usize,
    pub steps: u64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub config: TrainConfig,
}

/// Trains a zero-initialized model on the labeled `instances`.
pub fn train(
    instances: &[ClassificationInstance],
    scheme: &TaxonomyScheme,
    config: &TrainConfig,
) -> Result<SoftmaxModel, ClassifyError> {
    config.validate()?;
    if instances.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    let mut examples = Vec::with_capacity(instances.len());
    for inst in instances {
        let gold = inst
            .gold
            .as_ref()
            .ok_or_else(|| ClassifyError::MissingGold(inst.entity_id.clone()))?;
        let y = scheme.index_of(&gold.id).ok_or_else(|| ClassifyError::UnknownLabel {
            entity_id: inst.entity_id.clone(),
            label: gold.id.clone(),
        })?;
        examples.push((featurize_with(&inst.input_text, &config.featurizer), y));
    }
    let model = SoftmaxModel::zeros(scheme, config.featurizer.clone());
    train_vectors(model, &examples, config)
}

struct ColumnState {
    m: Vec<f64>,
    v: Vec<f64>,
    // last step applied to this column
    step: u64,
}

/// Brings a column up to `upto` by replaying the skipped steps with zero
/// gradient, which is exactly what a dense update would have done.
fn catch_up(
    col: &mut [f64],
    state: &mut ColumnState,
    upto: u64,
    adam: &AdamWConfig,
    schedule: &WarmupSchedule,
) {
    for t in state.step + 1..=upto {
        let s = StepParams::at(adam, schedule, t);
        for c in 0..col.len() {
            adamw_update(&mut col[c], &mut state.m[c], &mut state.v[c], 0.0, &s, true);
        }
    }
    state.step = upto;
}

/// Trains `model` in place on featurized examples.
pub fn train_vectors(
    mut model: SoftmaxModel,
    examples: &[(FeatureVector, usize)],
    config: &TrainConfig,
) -> Result<SoftmaxModel, ClassifyError> {
    config.validate()?;
    if examples.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    let c = model.n_classes();
    if let Some((_, y)) = examples.iter().find(|(_, y)| *y >= c) {
        return Err(ClassifyError::UnknownLabel {
            entity_id: String::new(),
            label: y.to_string(),
        });
    }
    let refs: Vec<(&FeatureVector, usize)> = examples.iter().map(|(x, y)| (x, *y)).collect();
    let initial_loss = mean_loss(&model, &refs, config.eval_batch_size);

    let adam = config.adamw();
    let total = config.steps_per_epoch(examples.len()) * config.epochs as u64;
    let schedule = WarmupSchedule::new(config.warmup_steps, total);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut states: BTreeMap<u32, ColumnState> = model
        .weights
        .keys()
        .map(|&j| {
            let state = ColumnState {
                m: vec![0.0; c],
                v: vec![0.0; c],
                step: 0,
            };
            (j, state)
        })
        .collect();
    let (mut bias_m, mut bias_v) = (vec![0.0; c], vec![0.0; c]);
    let mut step = 0u64;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            step += 1;
            let batch: Vec<(&FeatureVector, usize)> = chunk.iter().map(|&i| refs[i]).collect();
            for (x, _) in &batch {
                for &j in x.indices() {
                    let state = states.entry(j).or_insert_with(|| ColumnState {
                        m: vec![0.0; c],
                        v: vec![0.0; c],
                        step: step - 1,
                    });
                    if state.step < step - 1 {
                        let col = model.weights.entry(j).or_insert_with(|| vec![0.0; c]);
                        catch_up(col, state, step - 1, &adam, &schedule);
                    }
                }
            }
            let (_, grad) = loss_and_grad(&model, &batch);
            let s = StepParams::at(&adam, &schedule, step);
            for (j, g) in &grad.weights {
                let state = states.get_mut(j).expect("state created above");
                let col = model.weights.entry(*j).or_insert_with(|| vec![0.0; c]);
                for k in 0..c {
                    adamw_update(&mut col[k], &mut state.m[k], &mut state.v[k], g[k], &s, true);
                }
                state.step = step;
            }
            for k in 0..c {
                adamw_update(&mut model.bias[k], &mut bias_m[k], &mut bias_v[k], grad.bias[k], &s, false);
            }
        }
    }
    for (j, state) in states.iter_mut() {
        if let Some(col) = model.weights.get_mut(j) {
            catch_up(col, state, step, &adam, &schedule);
        }
    }

    let final_loss = mean_loss(&model, &refs, config.eval_batch_size);
    model.training = Some(TrainingSummary {
        examples: examples.len(),
        steps: step,
        initial_loss,
        final_loss,
        config: config.clone(),
    });
    Ok(model)
}
