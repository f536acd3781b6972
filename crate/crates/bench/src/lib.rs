//! Benchmark inputs shared by the criterion harnesses.

use std::path::PathBuf;

use weakmc::TransitionSystem;

/// The benchmark corpus shipped with the repository.
pub const CORPUS: &[&str] = &[
    "mutex_unfenced",
    "mutex_fenced",
    "spinlock",
    "barrier",
    "sb",
    "sb_fenced",
    "mp",
];

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

pub fn load(name: &str) -> TransitionSystem {
    let path = corpus_dir().join(format!("{name}.wmc"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    weakmc::parse_system(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}
