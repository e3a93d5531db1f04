//! Test fixtures: mock search and LLM providers and a small toy dataset.
//!
//! Servers run on their own runtime thread so they work from both plain and
//! async tests. Dropping a [`MockServer`] stops it.

mod llm;
mod search;
mod server;
pub mod toy;

pub use llm::{spawn_llm, FineTuneBehavior, LlmConfig, LlmMock, LlmReply, LlmRequest, Responder};
pub use search::{spawn_search, SearchConfig};
pub use server::{MockServer, Stats};

pub const GOLD_HILLS_NAME: &str = "Gold Hills Mining, Ltd.";
pub const GOLD_HILLS_SEARCH_JSON: &str = include_str!("../data/gold_hills_search.json");
pub const GOLD_HILLS_GSNIP1: &str = include_str!("../data/gold_hills_gsnip1.txt");
pub const GOLD_HILLS_GSNIP5: &str = include_str!("../data/gold_hills_gsnip5.txt");
pub const GOLD_HILLS_GSNIP10: &str = include_str!("../data/gold_hills_gsnip10.txt");

/// The Gold Hills organic results in provider shape.
pub fn gold_hills_results() -> Vec<serde_json::Value> {
    let v: serde_json::Value = serde_json::from_str(GOLD_HILLS_SEARCH_JSON).expect("fixture parses");
    v["organic_results"].as_array().expect("organic_results array").clone()
}
