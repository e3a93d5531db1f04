mod common;

use common::Workspace;
use entclass_fixtures::toy::toy_entities;

#[test]
fn acquire_counts_and_cache_reuse() {
    let ws = Workspace::new(&toy_entities()[..10], "gsnip");
    let out = ws.ok(&["acquire"]);
    assert!(out.contains("fetched 10, cache hits 0, refusals 0, failures 0"), "{out}");
    let index = std::fs::read_to_string(ws.path().join("cache/index.jsonl")).unwrap();
    assert_eq!(index.lines().count(), 10);

    let out = ws.ok(&["acquire"]);
    assert!(out.contains("fetched 0, cache hits 10"), "{out}");
    assert_eq!(ws.search.requests(), 10);
    assert_eq!(ws.read_json("acquire.json")["run_id"], "test");

    ws.ok(&["acquire", "--refresh"]);
    assert_eq!(ws.search.requests(), 20);

    let manifest = ws.read_json("manifest.json");
    assert_eq!(manifest["commands"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["source_signatures"][0], "gsnip10");
    assert_eq!(manifest["dataset"]["records"], 10);
}

#[test]
fn missing_key_is_a_config_error() {
    let ws = Workspace::new(&toy_entities()[..3], "gsnip");
    let out = ws.command(&["acquire"]).env_remove("SEARCH_API_KEY").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SEARCH_API_KEY"));
    assert!(!ws.run_file("acquire.json").exists());

    assert_eq!(ws.run(&["--set", "train.epochs=0", "train"]).status.code(), Some(2));
    assert_eq!(ws.run(&["--set", "sources=webpages", "acquire"]).status.code(), Some(2));
}

#[test]
fn network_failures_exit_3_in_strict_mode() {
    let ws = Workspace::new(&toy_entities()[..3], "gsnip");
    let out = ws
        .run(&["--set", "search.endpoint=\"http://127.0.0.1:9/search\"", "--run-id", "down", "--strict", "acquire"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // without --strict the failures are reported and the command succeeds
    let out = ws.ok(&["--set", "search.endpoint=\"http://127.0.0.1:9/search\"", "--run-id", "down2", "acquire"]);
    assert!(out.contains("failures 3"), "{out}");
}

#[test]
fn build_before_acquire_is_a_data_error() {
    let ws = Workspace::new(&toy_entities()[..3], "gsnip");
    assert_eq!(ws.run(&["--strict", "build"]).status.code(), Some(4));
    assert_eq!(ws.run(&["train"]).status.code(), Some(4));
}

#[test]
fn full_pipeline_with_remote_and_baseline() {
    let ws = Workspace::new(&toy_entities(), "gsnip+gptsum");
    let out = ws.ok(&["acquire"]);
    assert!(out.contains("refusals 5"), "{out}");
    let out = ws.ok(&["build"]);
    assert!(out.contains("50 instances (25 train, 9 dev, 16 test)"), "{out}");
    ws.ok(&["train"]);
    ws.ok(&["predict"]);
    ws.ok(&["eval"]);
    ws.ok(&["sweep"]);
    let report = ws.read_json("report.json");
    assert_eq!(report["run_id"], "test");
    assert_eq!(report["per_class"].as_array().unwrap().len(), 27);
    let sweep = std::fs::read_to_string(ws.run_file("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 7);

    ws.ok(&["train", "--remote", "--wait"]);
    let job = ws.read_json("remote_job.json");
    assert_eq!(job["fine_tuned_model"], "ft:mock-model:entclass:1");
    ws.ok(&["predict", "--remote", "--out", "remote_predictions.json"]);
    let remote = ws.read_json("remote_predictions.json");
    assert!(remote["predictions"][0].get("confidence").is_none_or(|c| c.is_null()));
    let out = ws.run(&["sweep", "--predictions", "remote_predictions.json", "--out", "remote_sweep.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no confidence"));

    ws.ok(&["baseline", "--context", "gsnip"]);
    let baseline = ws.read_json("baseline_predictions.json");
    assert_eq!(baseline["predictions"].as_array().unwrap().len(), 16);
    ws.ok(&["eval", "--predictions", "baseline_predictions.json", "--out", "baseline_report.json"]);
    // the toy LLM always answers with the right code
    let counts = ws.read_json("baseline_report.json")["confusion"]["counts"].clone();
    let rows = counts.as_array().unwrap();
    assert_eq!(rows.len(), 27);
    let diagonal: u64 = rows.iter().enumerate().map(|(i, r)| r[i].as_u64().unwrap()).sum();
    assert_eq!(diagonal, 16);
    ws.ok(&["eval", "--compare", "runs/test/baseline_report.json"]);
    let table = std::fs::read_to_string(ws.run_file("per_category.csv")).unwrap();
    assert_eq!(table.lines().count(), 28);
}

#[test]
fn ablation_writes_one_row_per_k() {
    let ws = Workspace::new(&toy_entities(), "gsnip");
    ws.ok(&["acquire"]);
    let out = ws.run(&["ablate"]);
    assert_eq!(out.status.code(), Some(4), "default ks include 20 but only 10 are cached");
    ws.ok(&["ablate", "--ks", "1,5,10"]);
    let csv = std::fs::read_to_string(ws.run_file("ablation.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], "k,macro_p,macro_r,macro_f1");
    assert!(rows[1].starts_with("1,") && rows[3].starts_with("10,"));
}
