//! Shared fixtures for the benchmarks.

use meinardus::models::builtin;
use meinardus::{PrecisionContext, WeightedModel};

/// Built-in models exercised by the benchmarks.
pub const MODELS: [&str; 3] = ["partitions", "distinct", "prime-powers"];

/// A catalogue model by name; panics on an unknown name.
pub fn model(name: &str) -> WeightedModel {
    builtin(name).unwrap_or_else(|e| panic!("benchmark model {name}: {e}"))
}

/// Default precision (256 bits, tol 1e-30).
pub fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}
