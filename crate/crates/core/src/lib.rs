//! Entity classification from acquired text.
//!
//! Given entity names and gold taxonomy codes, the pipeline acquires
//! descriptive text per entity (search snippets, LLM summaries, or both),
//! builds classifier corpora, trains and evaluates classifiers, and runs the
//! threshold and snippet-count analyses.

pub mod acquisition;
pub mod classify;
pub mod corpus;
pub mod eval;
pub mod taxonomy;
mod util;

pub use util::sha256_hex;
