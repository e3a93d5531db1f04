use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{confusion, macro_report, ConfusionMatrix, MacroReport};
use super::EvalError;
use crate::acquisition::{aggregate_snippets, Cache, SearchResult, SourceKind, SourceParams};
use crate::classify::{predict_instances, train, Prediction, SoftmaxModel, TrainConfig};
use crate::corpus::ClassificationInstance;
use crate::taxonomy::{Dataset, Split, TaxonomyScheme};

pub const DEFAULT_ABLATION_KS: [usize; 5] = [1, 5, 10, 15, 20];

/// Ranked search results for one entity, fetched at `depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnippetPool {
    pub depth: usize,
    pub results: Vec<SearchResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub k: usize,
    pub report: MacroReport,
}

/// Aligns predictions with dataset golds by entity id.
pub fn evaluate_predictions(
    dataset: &Dataset,
    predictions: &[Prediction],
) -> Result<(ConfusionMatrix, MacroReport), EvalError> {
    let mut golds = Vec::with_capacity(predictions.len());
    for p in predictions {
        let record = dataset
            .get(&p.entity_id)
            .ok_or_else(|| EvalError::UnknownEntity(p.entity_id.clone()))?;
        golds.push(record.label.clone());
    }
    let labels: Vec<_> = predictions.iter().map(|p| p.label.clone()).collect();
    let m = confusion(&golds, &labels, &dataset.scheme)?;
    let report = macro_report(&m);
    Ok((m, report))
}

#[derive(Debug, Clone)]
pub struct NativeRun {
    pub model: SoftmaxModel,
    pub predictions: Vec<Prediction>,
    pub confusion: ConfusionMatrix,
    pub report: MacroReport,
}

/// Trains on the train split and evaluates on the test split.
pub fn train_and_evaluate(
    dataset: &Dataset,
    instances: &[ClassificationInstance],
    config: &TrainConfig,
) -> Result<NativeRun, EvalError> {
    let split_of = |id: &str| dataset.get(id).map(|r| r.split);
    let train_set: Vec<ClassificationInstance> = instances
        .iter()
        .filter(|i| split_of(&i.entity_id) == Some(Split::Train))
        .cloned()
        .collect();
    let test_set: Vec<ClassificationInstance> = instances
        .iter()
        .filter(|i| split_of(&i.entity_id) == Some(Split::Test))
        .cloned()
        .collect();
    let model = train(&train_set, &dataset.scheme, config)?;
    let predictions = predict_instances(&model, &test_set);
    let (confusion, report) = evaluate_predictions(dataset, &predictions)?;
    Ok(NativeRun {
        model,
        predictions,
        confusion,
        report,
    })
}

/// For every k, re-aggregates the top-k snippets, retrains the native model
/// and evaluates it on the test split. Results are in ascending k.
pub fn ablate_snippets(
    dataset: &Dataset,
    pools: &BTreeMap<String, SnippetPool>,
    ks: &[usize],
    config: &TrainConfig,
) -> Result<Vec<AblationResult>, EvalError> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() || ks[0] == 0 {
        return Err(EvalError::InvalidKs(ks));
    }
    let max_k = *ks.last().expect("nonempty");
    for record in &dataset.records {
        let available = pools.get(&record.entity_id).map_or(0, |p| p.depth);
        if available < max_k {
            return Err(EvalError::InsufficientSnippets {
                entity_id: record.entity_id.clone(),
                k: max_k,
                available,
            });
        }
    }

    let mut records: Vec<_> = dataset.records.iter().collect();
    records.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));
    let mut out = Vec::with_capacity(ks.len());
    for k in ks {
        let signature = format!("gsnip{k}");
        let instances: Vec<ClassificationInstance> = records
            .iter()
            .map(|r| {
                let text = aggregate_snippets(&pools[&r.entity_id].results, k);
                ClassificationInstance::new(r, &text, &signature)
            })
            .collect();
        let run = train_and_evaluate(dataset, &instances, config)?;
        tracing::info!(k, macro_f1 = run.report.macro_f1, "ablation point");
        out.push(AblationResult { k, report: run.report });
    }
    Ok(out)
}

/// The deepest cached snippet list per entity for `scheme`'s task.
pub fn snippet_pools_from_cache(
    cache: &Cache,
    scheme: &TaxonomyScheme,
) -> Result<BTreeMap<String, SnippetPool>, EvalError> {
    let mut pools: BTreeMap<String, SnippetPool> = BTreeMap::new();
    for (key, entry) in cache.index()? {
        let depth = match (entry.task == scheme.task(), entry.source, &entry.params) {
            (true, SourceKind::Gsnip, SourceParams::Snippets { k }) => *k,
            _ => continue,
        };
        if pools.get(&entry.entity_id).is_some_and(|p| p.depth >= depth) {
            continue;
        }
        let Some(text) = cache.load(&key)? else { continue };
        let results = text.search_results().map(<[SearchResult]>::to_vec).unwrap_or_default();
        pools.insert(entry.entity_id, SnippetPool { depth, results });
    }
    Ok(pools)
}
