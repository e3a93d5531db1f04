use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use entclass_core::acquisition::{AcquiredText, Provenance, Role, SourceKind, SourceParams};
use entclass_core::corpus::*;
use entclass_core::taxonomy::{Dataset, Split, TaxonomyScheme};
use entclass_fixtures::{GOLD_HILLS_GSNIP10, GOLD_HILLS_NAME};
use proptest::prelude::*;

fn gsnip(id: &str, text: &str) -> AcquiredText {
    AcquiredText {
        entity_id: id.into(),
        source: SourceKind::Gsnip,
        params: SourceParams::Snippets { k: 10 },
        text: text.into(),
        retrieved_at: Utc.with_ymd_and_hms(2025, 6, 1, 12, 0, 0).unwrap(),
        provenance: Provenance::SearchResults(vec![]),
        refusal: false,
    }
}

fn dataset(rows: &str) -> Dataset {
    Dataset::from_reader(rows.as_bytes(), &TaxonomyScheme::sic(), Default::default()).unwrap()
}

#[test]
fn gold_hills_instance() {
    let ds = dataset(&format!(
        "entity_id,name,raw_code,split\ngh,\"{GOLD_HILLS_NAME}\",1040,train\n"
    ));
    let texts = BTreeMap::from([("gh".to_string(), gsnip("gh", GOLD_HILLS_GSNIP10))]);
    let out = build_instances(&ds.records, &texts, "gsnip10", BuildOptions::default()).unwrap();
    let inst = &out.instances[0];
    assert_eq!(inst.input_text, format!("{GOLD_HILLS_NAME}\n{GOLD_HILLS_GSNIP10}"));
    assert!(inst.input_text.starts_with("Gold Hills Mining, Ltd.\nGold Hills Mining, Ltd. is a junior"));
    assert_eq!(inst.gold.as_ref().unwrap().id, "10");
}

#[test]
fn chat_records_follow_message_contract() {
    let ds = dataset("entity_id,name,raw_code,split\na,Alpha Mines,1041,train\nb,Beta Bank,6021,test\n");
    let texts = BTreeMap::from([
        ("a".to_string(), gsnip("a", "Alpha digs gold.")),
        ("b".to_string(), gsnip("b", "Beta takes deposits.")),
    ]);
    let out = build_instances(&ds.records, &texts, "gsnip10", BuildOptions::default()).unwrap();
    let scheme = TaxonomyScheme::sic();
    let dir = tempfile::tempdir().unwrap();

    let train: Vec<_> = out.instances.iter().filter(|i| i.gold.is_some()).cloned().collect();
    let train_path = dir.path().join("train.jsonl");
    emit_chat_finetune(&train, &scheme, true, &train_path).unwrap();
    let raw = std::fs::read_to_string(&train_path).unwrap();
    assert!(raw.ends_with('\n') && !raw.contains('\r'));
    let line: serde_json::Value = serde_json::from_str(raw.lines().next().unwrap()).unwrap();
    let messages = line["messages"].as_array().unwrap();
    assert_eq!(messages.len(), 3);
    assert_eq!(messages[2]["role"], "assistant");
    assert_eq!(messages[2]["content"], "10");
    assert!(raw.starts_with(r#"{"messages":[{"role":"system","content":"#));
    let back = read_chat_finetune(&train_path).unwrap();
    assert_eq!(back[0].messages[1].content, "Alpha Mines\nAlpha digs gold.");
    assert_eq!(back[0].label(), Some("10"));

    let infer_path = dir.path().join("infer.jsonl");
    emit_chat_finetune(&out.instances, &scheme, false, &infer_path).unwrap();
    let back = read_chat_finetune(&infer_path).unwrap();
    assert!(back.iter().all(|r| r.messages.len() == 2 && r.messages[1].role == Role::User));

    let err = emit_chat_finetune(&out.instances, &scheme, true, dir.path().join("x.jsonl"));
    assert!(matches!(err, Err(CorpusError::MissingGold(id)) if id == "b"));
}

#[test]
fn tabular_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    emit_tabular(&[], &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b"");
    assert!(read_tabular(&path).unwrap().is_empty());

    let scheme = TaxonomyScheme::sic();
    let instances = vec![
        ClassificationInstance {
            entity_id: "a".into(),
            input_text: "A\nline one\nline two".into(),
            gold: Some(scheme.get("20").unwrap().clone()),
            source_signature: "gsnip10+gptsum".into(),
        },
        ClassificationInstance {
            entity_id: "b".into(),
            input_text: "B\n".into(),
            gold: None,
            source_signature: "gsnip10+gptsum".into(),
        },
        ClassificationInstance {
            entity_id: "c".into(),
            input_text: "C\n\u{201c}quoted\u{201d}".into(),
            gold: None,
            source_signature: "gptsum".into(),
        },
    ];
    let path = dir.path().join("three.jsonl");
    emit_tabular(&instances, &path).unwrap();
    let raw = std::fs::read_to_string(&path).unwrap();
    assert_eq!(raw.lines().count(), 3);
    assert!(!raw.lines().nth(1).unwrap().contains("gold"));
    assert_eq!(read_tabular(&path).unwrap(), instances);
}

#[test]
fn build_is_pure() {
    let csv = "entity_id,name,raw_code,split\nz,Zed,7372,train\na,Ay,1040,dev\nm,Em,6021,test\n";
    let ds = dataset(csv);
    let texts = BTreeMap::from([
        ("a".to_string(), gsnip("a", "gold")),
        ("m".to_string(), gsnip("m", "bank")),
        ("z".to_string(), gsnip("z", "software")),
    ]);
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for n in 0..2 {
        let out = build_instances(&ds.records, &texts, "gsnip10", BuildOptions::default()).unwrap();
        assert_eq!(out.instances.len(), ds.records.len());
        assert_eq!(
            out.instances.iter().map(|i| i.entity_id.as_str()).collect::<Vec<_>>(),
            ["a", "m", "z"]
        );
        assert_eq!(
            out.instances.iter().map(|i| i.gold.is_some()).collect::<Vec<_>>(),
            [true, false, true]
        );
        let p = dir.path().join(format!("{n}.jsonl"));
        emit_tabular(&out.instances, &p).unwrap();
        files.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(ds.get("m").unwrap().split, Split::Test);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trips(entries in proptest::collection::vec(("[a-z]{1,8}", "\\PC{0,40}", any::<bool>()), 0..8)) {
        let scheme = TaxonomyScheme::sic();
        let gold = scheme.get("73").unwrap().clone();
        let instances: Vec<ClassificationInstance> = entries
            .iter()
            .map(|(id, text, labeled)| ClassificationInstance {
                entity_id: id.clone(),
                input_text: format!("Name\n{text}"),
                gold: labeled.then(|| gold.clone()),
                source_signature: "gsnip10".into(),
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let tab = dir.path().join("t.jsonl");
        emit_tabular(&instances, &tab).unwrap();
        prop_assert_eq!(read_tabular(&tab).unwrap(), instances.clone());

        let chat = dir.path().join("c.jsonl");
        emit_chat_finetune(&instances, &scheme, false, &chat).unwrap();
        let records = read_chat_finetune(&chat).unwrap();
        prop_assert_eq!(records.len(), instances.len());
        for (r, i) in records.iter().zip(&instances) {
            let expected = ChatFineTuneRecord::from_instance(i, &system_instruction(&scheme), false).unwrap();
            prop_assert_eq!(r, &expected);
        }
    }
}
