//! A 50-entity toy SIC dataset with matching search results and summaries.

use serde_json::{json, Value};

use crate::llm::{LlmConfig, LlmReply};
use crate::search::SearchConfig;

const PREFIXES: [&str; 10] = [
    "Apex", "Birch", "Cobalt", "Delta", "Ember", "Falcon", "Granite", "Harbor", "Iris", "Juniper",
];
const SUFFIXES: [&str; 5] = ["Holdings", "Partners", "Group", "Industries", "Ventures"];

struct ToyClass {
    raw_code: &'static str,
    category: &'static str,
    keywords: [&'static str; 5],
}

const CLASSES: [ToyClass; 5] = [
    ToyClass {
        raw_code: "1040",
        category: "10",
        keywords: ["gold", "mine", "ore", "exploration", "drilling"],
    },
    ToyClass {
        raw_code: "2086",
        category: "20",
        keywords: ["beverage", "bottling", "snack", "brewery", "food"],
    },
    ToyClass {
        raw_code: "3674",
        category: "36",
        keywords: ["semiconductor", "chip", "circuit", "wafer", "electronic"],
    },
    ToyClass {
        raw_code: "6022",
        category: "60",
        keywords: ["bank", "deposit", "loan", "savings", "branch"],
    },
    ToyClass {
        raw_code: "7372",
        category: "73",
        keywords: ["software", "cloud", "platform", "developer", "subscription"],
    },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyEntity {
    pub entity_id: String,
    pub name: String,
    pub raw_code: String,
    /// Two-digit category the raw code maps to.
    pub category: String,
    pub keywords: [&'static str; 5],
    /// Summaries for this entity come back as refusals.
    pub refuses: bool,
}

pub fn toy_entities() -> Vec<ToyEntity> {
    let mut out = Vec::with_capacity(50);
    for (s, suffix) in SUFFIXES.iter().enumerate() {
        for (p, prefix) in PREFIXES.iter().enumerate() {
            let i = s * PREFIXES.len() + p;
            let class = &CLASSES[(p + s) % CLASSES.len()];
            out.push(ToyEntity {
                entity_id: format!("E{:03}", i + 1),
                name: format!("{prefix} {suffix}"),
                raw_code: class.raw_code.to_string(),
                category: class.category.to_string(),
                keywords: class.keywords,
                refuses: i % 10 == 7,
            });
        }
    }
    out
}

/// `entity_id,name,raw_code` CSV without a split column.
pub fn toy_dataset_csv(entities: &[ToyEntity]) -> String {
    let mut s = String::from("entity_id,name,raw_code\n");
    for e in entities {
        s.push_str(&format!("{},{},{}\n", e.entity_id, e.name, e.raw_code));
    }
    s
}

/// Ten ranked results; ranks 1 to 6 mention the class keywords.
pub fn toy_search_results(e: &ToyEntity) -> Vec<Value> {
    let n = e.entity_id[1..].parse::<usize>().unwrap_or(0);
    let kw = |r: usize| e.keywords[(r + n) % e.keywords.len()];
    (1..=10usize)
        .map(|rank| {
            let snippet = match rank {
                1 => format!("{} is a {} and {} company.", e.name, kw(1), kw(2)),
                2 => format!("{} reports growth in its {} business.", e.name, kw(2)),
                3 => format!("Latest {} news and {} updates from {}.", kw(3), kw(4), e.name),
                4 => format!("{} expands {} operations.", e.name, kw(4)),
                5 => format!("Analysts cover {} {} results.", e.name, kw(5)),
                6 => format!("{} careers in {}.", e.name, kw(6)),
                7 => format!("{} contact information, address and phone number.", e.name),
                8 => format!("Reviews and ratings for {}.", e.name),
                9 => String::new(),
                _ => format!("{} on social media.", e.name),
            };
            json!({
                "position": rank,
                "title": format!("{} - result {rank}", e.name),
                "link": format!("https://example.com/{}/{rank}", e.entity_id),
                "snippet": snippet,
            })
        })
        .collect()
}

pub fn toy_search_config(entities: &[ToyEntity]) -> SearchConfig {
    let mut config = SearchConfig::default();
    for e in entities {
        config.results.insert(e.name.clone(), toy_search_results(e));
    }
    config
}

pub fn toy_summary(e: &ToyEntity) -> String {
    if e.refuses {
        return format!("I'm sorry, but I don't have specific information about {}.", e.name);
    }
    format!(
        "{} operates in the {} sector, known for {} and {}. The company focuses on {}.",
        e.name, e.keywords[0], e.keywords[1], e.keywords[2], e.keywords[3]
    )
}

/// Summaries for summary prompts; for code-only prompts, answers with the
/// entity's category wrapped in a short sentence.
pub fn toy_llm_config(entities: &[ToyEntity]) -> LlmConfig {
    let entities = entities.to_vec();
    LlmConfig::new(move |req| {
        let prompt = req.last_user();
        let Some(e) = entities.iter().find(|e| prompt.contains(&e.name)) else {
            return LlmReply::text("I don't have information about that.");
        };
        if prompt.contains("Return ONLY the code") {
            return LlmReply::text(format!("The code is {}.", e.category));
        }
        LlmReply::text(toy_summary(e))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifty_unique_entities() {
        let es = toy_entities();
        assert_eq!(es.len(), 50);
        let names: std::collections::BTreeSet<_> = es.iter().map(|e| e.name.clone()).collect();
        assert_eq!(names.len(), 50);
        for a in &es {
            for b in &es {
                assert!(a.name == b.name || !a.name.contains(&b.name));
            }
        }
        assert_eq!(es.iter().filter(|e| e.refuses).count(), 5);
        for class in &CLASSES {
            assert_eq!(es.iter().filter(|e| e.category == class.category).count(), 10);
        }
    }

    #[test]
    fn results_are_ranked() {
        let e = &toy_entities()[0];
        let r = toy_search_results(e);
        assert_eq!(r.len(), 10);
        assert_eq!(r[0]["position"], 1);
        assert_eq!(r[8]["snippet"], "");
    }
}
