//! Shared helpers for integration tests: fixture loading and enumeration.
#![allow(dead_code)]

use microsplit_core::facts::{parse_facts, CodeFacts};
use microsplit_core::simcore::{parse_scenario, ScenarioScript};
use std::path::PathBuf;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn load_facts(name: &str) -> CodeFacts {
    let path = fixture_dir().join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    parse_facts(&text).unwrap_or_else(|e| panic!("parse {name}: {e}"))
}

pub fn load_scenario(name: &str, facts: &CodeFacts) -> ScenarioScript {
    let path = fixture_dir().join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    parse_scenario(&text, facts).unwrap_or_else(|e| panic!("parse {name}: {e}"))
}

/// Every facts fixture (excludes scenario files).
pub fn all_facts_fixtures() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_dir())
        .expect("fixtures dir")
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json") && !n.contains("scenario"))
        .collect();
    names.sort();
    assert!(!names.is_empty(), "no fixtures found");
    names
}
