//! The five reference-passing loss encodings plus the static-state one: each
//! must make the JSON engine diverge from the monolith with exactly the
//! expected finding category, while the ID engine stays faithful.

mod common;

use common::{load_facts, load_scenario};
use microsplit_core::protocols::{compare_protocols, FindingCategory};
use std::collections::BTreeSet;

fn check_loss(facts_name: &str, scenario_name: &str, expected: FindingCategory) {
    let facts = load_facts(facts_name);
    let scenario = load_scenario(scenario_name, &facts);
    let report = compare_protocols(&facts, &scenario);

    assert!(
        report.id_matches_monolith,
        "{facts_name}: id diverged\n--- monolith ---\n{}\n--- id ---\n{}",
        report.monolith.fingerprint, report.id.fingerprint
    );
    assert!(
        !report.json_matches_monolith,
        "{facts_name}: json unexpectedly matched the monolith"
    );
    let categories: BTreeSet<FindingCategory> =
        report.json.outcome.findings.iter().map(|f| f.category).collect();
    assert_eq!(
        categories,
        BTreeSet::from([expected]),
        "{facts_name}: findings {:?}",
        report.json.outcome.findings
    );
}

#[test]
fn external_update_to_passed_object_is_lost() {
    check_loss("fig4a.json", "fig4a_scenario.json", FindingCategory::ReferenceRebindLoss);
}

#[test]
fn aliased_subobjects_are_duplicated() {
    check_loss("fig4b.json", "fig4b_scenario.json", FindingCategory::AliasLoss);
}

#[test]
fn this_passed_outward_is_never_updated() {
    check_loss("fig4c.json", "fig4c_scenario.json", FindingCategory::ThisNotUpdated);
}

#[test]
fn parameter_update_does_not_reach_other_holders() {
    check_loss("fig4d.json", "fig4d_scenario.json", FindingCategory::ReferenceRebindLoss);
}

#[test]
fn deserialization_replays_constructor_side_effects() {
    check_loss("fig4e.json", "fig4e_scenario.json", FindingCategory::ConstructorSideEffect);
}

#[test]
fn static_writes_land_on_the_wrong_replica() {
    check_loss("static_loss.json", "static_loss_scenario.json", FindingCategory::StaticLoss);
}

#[test]
fn aliasing_outcome_matches_the_narrative() {
    // Under JSON passing the shared node is materialized twice on the
    // server, so only the copy reachable through `right` gets renamed.
    let facts = load_facts("fig4b.json");
    let scenario = load_scenario("fig4b_scenario.json", &facts);
    let report = compare_protocols(&facts, &scenario);
    let fp = &report.json.fingerprint;
    assert!(fp.contains("\"abc\"") && fp.contains("\"pqr\""), "json fingerprint:\n{fp}");
    let mono = &report.monolith.fingerprint;
    assert!(
        mono.contains("\"abc\"") && !mono.contains("\"pqr\""),
        "monolith renames the single shared node:\n{mono}"
    );
}
