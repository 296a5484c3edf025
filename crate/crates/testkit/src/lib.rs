//! Helpers for testing the query engine and the lints built on it.

pub mod gen;
pub mod graph;
pub mod reference;
pub mod tracing;

pub use gen::{random_query, GeneratedQuery};
pub use graph::{graph_schema, GraphAdapter, GraphVertex, GRAPH_SCHEMA};
pub use reference::{reference_run, row_multiset};
pub use tracing::{Call, CallCounts, CountingAdapter, TracingAdapter};

/// Deterministic RNG for reproducible generated cases.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
