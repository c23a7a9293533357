#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::Value;
use symbiont_harness::{load_scenario, Scenario};

pub fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn duopoly_path() -> PathBuf {
    scenarios_dir().join("duopoly.json")
}

pub fn duopoly() -> Scenario {
    load_scenario(duopoly_path()).unwrap()
}

pub fn duopoly_json() -> Value {
    serde_json::from_str(&std::fs::read_to_string(duopoly_path()).unwrap()).unwrap()
}

/// Duopoly with `(path, value)` overrides applied in order.
pub fn duopoly_with(overrides: &[(&str, Value)]) -> Scenario {
    overrides
        .iter()
        .fold(duopoly(), |s, (p, v)| s.with_override(p, v.clone()).unwrap())
}
