#![allow(dead_code)]

use std::path::{Path, PathBuf};

use dendronn::config::RunConfig;
use serde_json::Value;

/// Workspace root, for configs and fixtures.
pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Loads a shipped config and redirects its output into `out`.
pub fn shipped_config(name: &str, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&root().join("configs").join(name)).unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

/// Builds a config from JSON, with paths resolved against `out`.
pub fn config(json: Value, out: &Path) -> RunConfig {
    let mut cfg: RunConfig = serde_json::from_value(json).unwrap();
    cfg.out = out.to_path_buf();
    cfg.validate().unwrap();
    cfg
}

/// A small NeuroMorse run: 10 train words, 20 null words.
pub fn small_neuromorse(out: &Path, engine: &str) -> RunConfig {
    config(
        serde_json::json!({
            "dataset": {
                "kind": "neuromorse",
                "train_words": ["the", "be", "to", "of", "and", "a", "in", "that", "have", "i"],
                "null_words": ["it", "for", "not", "on", "with", "he", "as", "you", "do", "at",
                               "this", "but", "his", "by", "from", "they", "we", "say", "her", "she"]
            },
            "network": { "refractory": true },
            "rewiring": { "n_units": 40, "theta_s": 0.1, "interval_upper_bound": 50, "max_batches": 5000 },
            "train": { "epochs": 300, "batch_size": 5, "prune_rate": 0.5 },
            "engine": engine,
            "seed": 3
        }),
        out,
    )
}
