//! Ingestion round-trips: every fixture and every generated facts instance
//! must survive serialize → parse unchanged, and strict mode must reject
//! what lenient mode tolerates.

mod common;

use common::{all_facts_fixtures, load_facts};
use microsplit_core::facts::{parse_facts, parse_facts_lenient, serialize_facts};
use microsplit_core::protocols::fuzz;

#[test]
fn fixtures_round_trip() {
    for name in all_facts_fixtures() {
        let facts = load_facts(&name);
        let text = serialize_facts(&facts);
        let reparsed = parse_facts(&text).unwrap_or_else(|e| panic!("re-parse {name}: {e}"));
        assert_eq!(facts, reparsed, "round trip changed {name}");
    }
}

#[test]
fn generated_facts_round_trip() {
    for seed in 0..200u64 {
        let (facts, _) = fuzz::random_case(seed);
        let text = serialize_facts(&facts);
        let reparsed = parse_facts(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(facts, reparsed, "round trip changed seed {seed}");
    }
}

#[test]
fn strict_rejects_unknown_keys_lenient_ignores_them() {
    let text = r#"{
        "clusters": ["c1"],
        "classes": [{"name": "A", "cluster": "c1", "color": "red", "fields": [], "methods": []}]
    }"#;
    assert!(parse_facts(text).is_err(), "strict mode accepted an unknown key");
    let (facts, warnings) = parse_facts_lenient(text).expect("lenient mode");
    assert_eq!(facts.classes.len(), 1);
    assert!(!warnings.is_empty(), "lenient mode should warn about the unknown key");
}

proptest::proptest! {
    #[test]
    fn method_refs_round_trip(
        class in "[A-Z][A-Za-z0-9]{0,12}",
        method in "[a-z][A-Za-z0-9]{0,12}",
        arity in 0usize..16,
    ) {
        use microsplit_core::facts::MethodRef;
        let rendered = format!("{class}.{method}/{arity}");
        let parsed: MethodRef = rendered.parse().expect("well-formed ref parses");
        proptest::prop_assert_eq!(parsed.to_string(), rendered);
    }
}

#[test]
fn dangling_refs_are_rejected() {
    let text = r#"{
        "clusters": ["c1"],
        "classes": [{"name": "A", "cluster": "c1", "fields": [], "methods": []}],
        "calls": [{"from": "A.main/0", "to": "B.run/0"}]
    }"#;
    assert!(parse_facts(text).is_err(), "dangling call edge accepted");
}
