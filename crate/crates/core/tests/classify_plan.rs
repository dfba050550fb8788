//! Hand-oracled classification tables, plan coverage, and the link between
//! classifier labels and simulated outcomes.

mod common;

use common::{all_facts_fixtures, load_facts};
use microsplit_core::classify::{
    api_surface, classification_report, ApiKind, TransferCategory,
};
use microsplit_core::facts::parse_facts;
use microsplit_core::plan::{generate_plan, lint, WrapperSide};
use microsplit_core::protocols::exercise::exercise_api;
use microsplit_core::protocols::{compare_protocols, FindingCategory};

#[test]
fn pbw_mini_classifies_both_apis_as_static() {
    let facts = load_facts("pbw_mini.json");
    let report = classification_report(&facts);
    assert_eq!(report.total, 2);

    let ctor = report
        .apis
        .iter()
        .find(|a| a.api.kind == ApiKind::Constructor)
        .expect("constructor api");
    assert_eq!(ctor.api.member, "CatalogMgr.CatalogMgr/0");
    // Constructing remotely hands back a CatalogMgr, whose static catalog
    // field cannot travel; the library member taints it too.
    assert_eq!(ctor.primary, TransferCategory::Static);
    assert!(ctor.categories.contains(&TransferCategory::Library));

    let method = report
        .apis
        .iter()
        .find(|a| a.api.kind == ApiKind::Method)
        .expect("method api");
    assert_eq!(method.api.member, "CatalogMgr.addItem/2");
    assert_eq!(method.primary, TransferCategory::Static);
    assert_eq!(report.counts[&TransferCategory::Static], 2);
}

#[test]
fn category_table_covers_each_taint() {
    // One class per taint, all called from a second cluster.
    let facts = parse_facts(
        r#"{
        "clusters": ["c1", "c2"],
        "classes": [
            {"name": "Caller", "cluster": "c1", "fields": [], "methods": [{"name": "main"}]},
            {"name": "Plain", "cluster": "c2",
             "fields": [{"name": "v", "type": {"kind": "primitive"}}],
             "methods": [{"name": "touch"}]},
            {"name": "HasStatic", "cluster": "c2",
             "fields": [{"name": "shared", "type": {"kind": "primitive"}, "static": true}],
             "methods": [{"name": "touch"}]},
            {"name": "HasLibrary", "cluster": "c2",
             "fields": [{"name": "conn", "type": {"kind": "library"}}],
             "methods": [{"name": "touch"}]},
            {"name": "Lonely", "cluster": "c2", "singleton": true,
             "fields": [], "methods": [{"name": "touch"}]},
            {"name": "Held", "cluster": "c2",
             "fields": [], "methods": [{"name": "touch"}]},
            {"name": "Holder", "cluster": "c2",
             "fields": [{"name": "held", "type": {"kind": "declared", "class": "Held"}}],
             "methods": []}
        ],
        "calls": [
            {"from": "Caller.main/0", "to": "Plain.touch/0"},
            {"from": "Caller.main/0", "to": "HasStatic.touch/0"},
            {"from": "Caller.main/0", "to": "HasLibrary.touch/0"},
            {"from": "Caller.main/0", "to": "Lonely.touch/0"},
            {"from": "Caller.main/0", "to": "Held.touch/0"}
        ]
    }"#,
    )
    .expect("facts");
    let report = classification_report(&facts);
    let primary_of = |class: &str| {
        report
            .apis
            .iter()
            .find(|a| a.api.owner_class == class)
            .unwrap_or_else(|| panic!("no api for {class}"))
            .primary
    };
    assert_eq!(primary_of("Plain"), TransferCategory::PassJson);
    assert_eq!(primary_of("HasStatic"), TransferCategory::Static);
    assert_eq!(primary_of("HasLibrary"), TransferCategory::Library);
    assert_eq!(primary_of("Lonely"), TransferCategory::Singleton);
    assert_eq!(primary_of("Held"), TransferCategory::Referenced);
}

#[test]
fn labels_predict_simulated_outcomes() {
    for name in all_facts_fixtures() {
        let facts = load_facts(&name);
        for entry in classification_report(&facts).apis {
            let Some(probe) = exercise_api(&facts, &entry) else { continue };
            let report = compare_protocols(&probe.facts, &probe.scenario);
            if probe.expect_loss {
                assert!(
                    report
                        .json
                        .outcome
                        .findings
                        .iter()
                        .any(|f| f.category == FindingCategory::StaticLoss),
                    "{name}/{}: static probe produced no StaticLoss: {:?}",
                    entry.api.member,
                    report.json.outcome.findings
                );
                assert!(
                    !report.json_matches_monolith,
                    "{name}/{}: static probe did not diverge",
                    entry.api.member
                );
            } else {
                assert!(
                    report.json.outcome.findings.is_empty(),
                    "{name}/{}: PassJson probe produced findings {:?}",
                    entry.api.member,
                    report.json.outcome.findings
                );
                assert!(
                    report.json_matches_monolith,
                    "{name}/{}: PassJson probe diverged",
                    entry.api.member
                );
            }
            assert!(
                report.id_matches_monolith,
                "{name}/{}: id engine diverged on the probe",
                entry.api.member
            );
        }
    }
}

#[test]
fn pbw_mini_plan_matches_the_wrapper_convention() {
    let facts = load_facts("pbw_mini.json");
    let plan = generate_plan(&facts);
    assert_eq!(plan.server_endpoint_count(), api_surface(&facts).len());

    let servers: Vec<_> = plan
        .wrappers
        .get("c2")
        .expect("server cluster wrappers")
        .iter()
        .filter(|w| w.side == WrapperSide::Server)
        .collect();
    assert_eq!(servers.len(), 1);
    let server = servers[0];
    assert_eq!(server.wrapped_class_name, "CatalogMgr");
    assert_eq!(server.renamed_original.as_deref(), Some("CatalogMgrServer"));
    let routes: Vec<&str> = server.endpoints.iter().map(|e| e.route.as_str()).collect();
    assert!(routes.contains(&"/catalogmgr/create"), "routes: {routes:?}");
    assert!(routes.contains(&"/catalogmgr/addItem"), "routes: {routes:?}");

    // The client stub keeps the original name so call sites stay untouched.
    let clients: Vec<_> = plan
        .wrappers
        .get("c1")
        .expect("client cluster wrappers")
        .iter()
        .filter(|w| w.side == WrapperSide::Client)
        .collect();
    assert_eq!(clients.len(), 1);
    assert_eq!(clients[0].wrapper_class_name, "CatalogMgr");

    let warnings = lint(&facts, &plan);
    assert!(
        warnings.iter().any(|w| w.contains("static sharing")),
        "lint: {warnings:?}"
    );
}

#[test]
fn endpoint_counts_cover_the_surface_on_all_fixtures() {
    for name in all_facts_fixtures() {
        let facts = load_facts(&name);
        let plan = generate_plan(&facts);
        assert_eq!(
            plan.server_endpoint_count(),
            api_surface(&facts).len(),
            "plan does not cover the surface of {name}"
        );
    }
}

#[test]
fn two_client_clusters_each_get_a_stub() {
    let facts = parse_facts(
        r#"{
        "clusters": ["a", "b", "s"],
        "classes": [
            {"name": "FromA", "cluster": "a", "fields": [], "methods": [{"name": "main"}]},
            {"name": "FromB", "cluster": "b", "fields": [], "methods": [{"name": "main"}]},
            {"name": "Svc", "cluster": "s", "fields": [], "methods": [{"name": "go"}]}
        ],
        "calls": [
            {"from": "FromA.main/0", "to": "Svc.go/0"},
            {"from": "FromB.main/0", "to": "Svc.go/0"}
        ]
    }"#,
    )
    .expect("facts");
    let plan = generate_plan(&facts);
    for cluster in ["a", "b"] {
        let stubs: Vec<_> = plan.wrappers[cluster]
            .iter()
            .filter(|w| w.side == WrapperSide::Client && w.wrapped_class_name == "Svc")
            .collect();
        assert_eq!(stubs.len(), 1, "cluster {cluster}");
    }
    assert_eq!(plan.server_endpoint_count(), 1);
}

#[test]
fn overridden_methods_get_a_dispatch_table_entry() {
    let facts = parse_facts(
        r#"{
        "clusters": ["c1", "c2"],
        "classes": [
            {"name": "Caller", "cluster": "c1", "fields": [], "methods": [{"name": "main"}]},
            {"name": "Base", "cluster": "c2", "fields": [], "methods": [{"name": "go"}]},
            {"name": "Derived", "cluster": "c2", "extends": "Base",
             "fields": [], "methods": [{"name": "go"}]}
        ],
        "calls": [
            {"from": "Caller.main/0", "to": "Base.go/0"},
            {"from": "Caller.main/0", "to": "Derived.go/0"}
        ]
    }"#,
    )
    .expect("facts");
    let plan = generate_plan(&facts);
    let entries = plan
        .dispatch_table
        .get("Base.go/0")
        .expect("dispatch entry for the overridden method");
    assert_eq!(
        entries,
        &vec![
            ("Base".to_string(), "/base/go".to_string()),
            ("Derived".to_string(), "/derived/go".to_string()),
        ]
    );
}
