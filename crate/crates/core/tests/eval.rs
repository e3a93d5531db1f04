use std::sync::Arc;
use std::time::Duration;

use entclass_core::acquisition::{Acquirer, AcquisitionConfig, Cache, RequestGate, RetryPolicy, SearchClient, SourceSpec};
use entclass_core::classify::{PredictedLabel, Prediction, TrainConfig};
use entclass_core::eval::*;
use entclass_core::taxonomy::{Dataset, TaskId, TaxonomyScheme};
use entclass_fixtures::spawn_search;
use entclass_fixtures::toy::{toy_dataset_csv, toy_entities, toy_search_config};
use proptest::prelude::*;

// Counts straight from the pairs, no confusion matrix.
fn brute_force(c: usize, golds: &[usize], preds: &[Option<usize>]) -> Vec<(f64, f64, f64)> {
    (0..c)
        .map(|k| {
            let tp = golds.iter().zip(preds).filter(|(g, p)| **g == k && **p == Some(k)).count() as f64;
            let predicted = preds.iter().filter(|p| **p == Some(k)).count() as f64;
            let actual = golds.iter().filter(|g| **g == k).count() as f64;
            let p = if predicted == 0.0 { 0.0 } else { tp / predicted };
            let r = if actual == 0.0 { 0.0 } else { tp / actual };
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            (p, r, f)
        })
        .collect()
}

fn classes(c: usize) -> Vec<String> {
    (0..c).map(|k| format!("k{k}")).collect()
}

fn pairs_strategy() -> impl Strategy<Value = (usize, Vec<(usize, Option<usize>)>)> {
    (1usize..6).prop_flat_map(|c| {
        let pair = (0..c, proptest::option::weighted(0.8, 0..c));
        (Just(c), proptest::collection::vec(pair, 0..60))
    })
}

proptest! {
    #[test]
    fn macro_report_matches_brute_force((c, pairs) in pairs_strategy()) {
        let golds: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let preds: Vec<Option<usize>> = pairs.iter().map(|p| p.1).collect();
        let m = ConfusionMatrix::from_indices(classes(c), &golds, &preds).unwrap();
        prop_assert_eq!(m.total(), pairs.len() as u64);
        prop_assert_eq!(m.invalid_count(), preds.iter().filter(|p| p.is_none()).count() as u64);
        let report = macro_report(&m);
        let oracle = brute_force(c, &golds, &preds);
        for (got, (p, r, f)) in report.per_class.iter().zip(&oracle) {
            prop_assert!((got.precision - p).abs() < 1e-12);
            prop_assert!((got.recall - r).abs() < 1e-12);
            prop_assert!((got.f1 - f).abs() < 1e-12);
        }
        let n = c as f64;
        prop_assert!((report.macro_f1 - oracle.iter().map(|o| o.2).sum::<f64>() / n).abs() < 1e-12);
        prop_assert!((report.macro_p - oracle.iter().map(|o| o.0).sum::<f64>() / n).abs() < 1e-12);
        for x in [report.macro_p, report.macro_r, report.macro_f1] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn sweep_is_monotone(
        (c, pairs) in pairs_strategy(),
        confs in proptest::collection::vec(0.0f64..=1.0, 60),
        inclusive in any::<bool>(),
    ) {
        let scored: Vec<ScoredPair> = pairs
            .iter()
            .zip(&confs)
            .map(|(&(gold, pred), &confidence)| ScoredPair { gold, pred, confidence })
            .collect();
        let rule = if inclusive { ThresholdRule::AtLeast } else { ThresholdRule::Exceeds };
        let grid: Vec<f64> = (0..=20).map(|i| f64::from(i) / 20.0).collect();
        let points = sweep_pairs(&classes(c), &scored, &grid, rule).unwrap();
        for w in points.windows(2) {
            prop_assert!(w[1].coverage <= w[0].coverage);
            prop_assert!(w[1].n_labeled <= w[0].n_labeled);
            prop_assert!(w[1].recall <= w[0].recall + 1e-12);
        }
        for pt in &points {
            let kept = scored.iter().filter(|s| rule.keeps(s.confidence, pt.threshold)).count();
            prop_assert_eq!(pt.n_labeled, kept);
            prop_assert!((0.0..=1.0).contains(&pt.precision) && (0.0..=1.0).contains(&pt.recall));
        }
        // at threshold 0 with >=, nothing is dropped and recall is plain macro recall
        if inclusive && !scored.is_empty() {
            let golds: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let preds: Vec<Option<usize>> = pairs.iter().map(|p| p.1).collect();
            let full = macro_report(&ConfusionMatrix::from_indices(classes(c), &golds, &preds).unwrap());
            prop_assert_eq!(points[0].coverage, 1.0);
            prop_assert!((points[0].recall - full.macro_r).abs() < 1e-12);
            prop_assert!((points[0].precision - full.macro_p).abs() < 1e-12);
        }
    }
}

#[test]
fn sweep_from_predictions() {
    let scheme = TaxonomyScheme::sic();
    let label = |id: &str| scheme.get(id).unwrap().clone();
    let pred = |id: &str, l: PredictedLabel, c: f64| Prediction {
        entity_id: id.into(),
        label: l,
        confidence: Some(c),
        scores: None,
    };
    let golds = vec![label("10"), label("10"), label("20"), label("73")];
    let preds = vec![
        pred("a", PredictedLabel::Category(label("10")), 0.9),
        pred("b", PredictedLabel::Category(label("20")), 0.7),
        pred("c", PredictedLabel::Category(label("20")), 0.65),
        pred("d", PredictedLabel::Invalid, 0.95),
    ];
    let pts = threshold_sweep(&preds, &golds, &scheme, &default_thresholds(), ThresholdRule::Exceeds).unwrap();
    let coverage: Vec<f64> = pts.iter().map(|p| p.coverage).collect();
    assert_eq!(coverage, [1.0, 0.75, 0.5, 0.5, 0.5, 0.5]);
    assert_eq!(pts[1].n_labeled, 3);
    // kept at 0.65: a (10 -> 10), b (10 -> 20), d (73 -> INVALID); 27 classes
    assert!((pts[1].precision - 1.0 / 27.0).abs() < 1e-12);
    assert!((pts[1].recall - 0.5 / 27.0).abs() < 1e-12);
    let inclusive = threshold_sweep(&preds, &golds, &scheme, &[0.65], ThresholdRule::AtLeast).unwrap();
    assert_eq!(inclusive[0].n_labeled, 4);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_sweep_csv(&path, &pts).unwrap();
    assert_eq!(read_sweep_csv(&path).unwrap(), pts);

    let err = threshold_sweep(&preds[..3], &golds, &scheme, &[0.5], ThresholdRule::Exceeds);
    assert!(matches!(err, Err(EvalError::LengthMismatch { golds: 4, preds: 3 })));
}

fn toy_dataset() -> Dataset {
    Dataset::from_reader(toy_dataset_csv(&toy_entities()).as_bytes(), &TaxonomyScheme::sic(), Default::default())
        .unwrap()
}

async fn cached_pools(depth: usize) -> (tempfile::TempDir, Arc<Cache>) {
    let entities = toy_entities();
    let server = spawn_search(toy_search_config(&entities));
    let dir = tempfile::tempdir().unwrap();
    let cache = Arc::new(Cache::open(dir.path()).unwrap());
    let retry = RetryPolicy {
        max_attempts: 2,
        base_backoff: Duration::from_millis(5),
    };
    let acquirer = Acquirer::new(TaskId::Sic, cache.clone(), &AcquisitionConfig::default()).with_search(
        SearchClient::new(format!("{}/search", server.url()), "test-search-key", RequestGate::new(4, None, retry)),
    );
    let pairs: Vec<(String, String)> = entities.iter().map(|e| (e.entity_id.clone(), e.name.clone())).collect();
    for (_, r) in acquirer.acquire_many(&pairs, &SourceSpec::Gsnip { k: depth }).await {
        r.unwrap();
    }
    (dir, cache)
}

#[tokio::test]
async fn ablation_over_cached_snippets() {
    let (_dir, cache) = cached_pools(10).await;
    let ds = toy_dataset();
    let pools = snippet_pools_from_cache(&cache, &ds.scheme).unwrap();
    assert_eq!(pools.len(), 50);
    assert!(pools.values().all(|p| p.depth == 10 && p.results.len() == 10));

    let config = TrainConfig::default();
    let err = ablate_snippets(&ds, &pools, &DEFAULT_ABLATION_KS, &config).unwrap_err();
    assert!(matches!(err, EvalError::InsufficientSnippets { k: 20, available: 10, .. }));
    assert!(matches!(ablate_snippets(&ds, &pools, &[0, 5], &config), Err(EvalError::InvalidKs(_))));

    let results = ablate_snippets(&ds, &pools, &[10, 1, 5], &config).unwrap();
    assert_eq!(results.iter().map(|r| r.k).collect::<Vec<_>>(), [1, 5, 10]);
    assert!(
        results[1].report.macro_f1 >= results[0].report.macro_f1,
        "F1(5)={} F1(1)={}",
        results[1].report.macro_f1,
        results[0].report.macro_f1
    );
    let again = ablate_snippets(&ds, &pools, &[1, 5, 10], &config).unwrap();
    assert_eq!(again, results);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ablation.csv");
    write_ablation_csv(&path, &results).unwrap();
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("k,macro_p,macro_r,macro_f1\n1,"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn unknown_prediction_entity() {
    let ds = toy_dataset();
    let p = Prediction::unscored("nope", PredictedLabel::Invalid);
    assert!(matches!(evaluate_predictions(&ds, &[p]), Err(EvalError::UnknownEntity(id)) if id == "nope"));
}
