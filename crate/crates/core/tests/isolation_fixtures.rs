//! Relocation semantics on the curated fixtures: which subgraphs move, where
//! they land, how the fixpoint iterates, and that nothing is lost or
//! duplicated along the way.

mod common;

use common::{all_facts_fixtures, load_facts};
use microsplit_core::facts::{cross_cluster_edges, CodeFacts};
use microsplit_core::isolation::{
    apply_relocations, isolate, relocation_candidates, Iterations, KeepReason, Policy, Verdict,
};
use microsplit_core::protocols::fuzz;
use std::collections::BTreeMap;

/// Multiset of every member in the program, keyed independently of which
/// class declares it: methods by (name, arity, effects), fields by
/// (name, type).
fn member_multiset(facts: &CodeFacts) -> (BTreeMap<String, usize>, BTreeMap<String, usize>) {
    let mut methods: BTreeMap<String, usize> = BTreeMap::new();
    let mut fields: BTreeMap<String, usize> = BTreeMap::new();
    for class in &facts.classes {
        for m in &class.methods {
            *methods.entry(format!("{}/{} {:?}", m.name, m.arity(), m.effects)).or_default() += 1;
        }
        for f in &class.fields {
            *fields.entry(format!("{} {:?}", f.name, f.ty)).or_default() += 1;
        }
    }
    (methods, fields)
}

#[test]
fn tradeconfig_relocates_the_servlet_subgraph() {
    let facts = load_facts("tradeconfig_mini.json");
    let decisions = relocation_candidates(&facts, Policy::PaperSimple);
    let trade: Vec<_> = decisions
        .iter()
        .filter(|d| d.subgraph.class_name == "TradeConfig")
        .collect();
    assert_eq!(trade.len(), 2, "TradeConfig splits into two subgraphs");

    let by_method = |name: &str| {
        trade
            .iter()
            .find(|d| d.subgraph.contains_method(&format!("TradeConfig.{name}/0").parse().unwrap()))
            .unwrap_or_else(|| panic!("no subgraph contains {name}"))
    };
    let moved = by_method("rndNewUserID");
    let kept = by_method("random");

    assert_eq!(
        moved.verdict,
        Verdict::Relocate { target_cluster: "k2".to_string() },
        "the rndNewUserID/getHostname subgraph is accessed only from k2"
    );
    assert!(moved.subgraph.contains_method(&"TradeConfig.getHostname/0".parse().unwrap()));
    assert!(moved.subgraph.contains_field(&"TradeConfig.count".parse().unwrap()));
    assert!(moved.subgraph.contains_field(&"TradeConfig.hostName".parse().unwrap()));
    assert!(moved.subgraph.contains_field(&"TradeConfig.newUserPrefix".parse().unwrap()));
    assert_eq!(moved.new_class_name.as_deref(), Some("TradeConfig_Iso1"));

    assert_eq!(
        kept.verdict,
        Verdict::Keep { reason: KeepReason::MultiClusterAccess },
        "the random/rndBoolean subgraph is shared by k2 and k3"
    );
    assert!(kept.subgraph.contains_method(&"TradeConfig.rndBoolean/0".parse().unwrap()));
    assert!(kept.subgraph.contains_field(&"TradeConfig.randomNumberGenerator".parse().unwrap()));
    assert_eq!(
        kept.accessing_clusters.iter().collect::<Vec<_>>(),
        ["k2", "k3"]
    );

    // The move pays off: four cross edges collapse to two.
    let (after, report) = isolate(&facts, Iterations::Fixpoint, Policy::PaperSimple).unwrap();
    assert_eq!(report.cross_edges_before, 4);
    assert_eq!(report.cross_edges_after, 3);
    let new_class = after.class("TradeConfig_Iso1").expect("relocated class exists");
    assert_eq!(new_class.cluster, "k2");
    assert_eq!(new_class.methods.len(), 2);
    assert_eq!(new_class.fields.len(), 3);
    let old = after.class("TradeConfig").expect("original class retained");
    assert_eq!(old.methods.len(), 2);
    assert_eq!(old.fields.len(), 1);
}

#[test]
fn net_reduction_policy_blocks_losing_moves() {
    let facts = load_facts("net_reduction.json");
    let simple = relocation_candidates(&facts, Policy::PaperSimple);
    let lone_simple = simple
        .iter()
        .find(|d| d.subgraph.contains_method(&"X.lone/0".parse().unwrap()))
        .expect("X.lone subgraph");
    assert_eq!(lone_simple.verdict, Verdict::Relocate { target_cluster: "t".to_string() });

    let net = relocation_candidates(&facts, Policy::NetReduction);
    let lone_net = net
        .iter()
        .find(|d| d.subgraph.contains_method(&"X.lone/0".parse().unwrap()))
        .expect("X.lone subgraph");
    assert_eq!(
        lone_net.verdict,
        Verdict::Keep { reason: KeepReason::NetIncrease },
        "moving X.lone removes 1 cross edge but creates 3"
    );

    // And the edge counts agree with the verdicts.
    let (_, simple_report) = isolate(&facts, Iterations::Count(1), Policy::PaperSimple).unwrap();
    assert_eq!(simple_report.cross_edges_before, 1);
    assert_eq!(simple_report.cross_edges_after, 3);
    let (_, net_report) = isolate(&facts, Iterations::Fixpoint, Policy::NetReduction).unwrap();
    assert_eq!(net_report.cross_edges_after, 1);
    assert_eq!(net_report.relocated, 0);
}

#[test]
fn chained_relocation_needs_two_iterations() {
    let facts = load_facts("chained.json");

    // One round only moves A.helper; B.leaf is then called cross-cluster.
    let (once, report_once) = isolate(&facts, Iterations::Count(1), Policy::PaperSimple).unwrap();
    assert_eq!(report_once.iterations, 1);
    assert_eq!(report_once.relocations_per_iteration, [1]);
    assert_eq!(once.class("A_Iso1").map(|c| c.cluster.as_str()), Some("c2"));
    assert_eq!(cross_cluster_edges(&once).len(), 1);

    // The fixpoint chases the chain to the end.
    let (fixed, report) = isolate(&facts, Iterations::Fixpoint, Policy::PaperSimple).unwrap();
    assert_eq!(report.iterations, 2);
    assert_eq!(report.relocations_per_iteration, [1, 1]);
    assert_eq!(fixed.class("B_Iso1").map(|c| c.cluster.as_str()), Some("c2"));
    assert_eq!(report.cross_edges_before, 1);
    assert_eq!(report.cross_edges_after, 0);
}

#[test]
fn relocation_conserves_members_on_fixtures() {
    for name in all_facts_fixtures() {
        let facts = load_facts(&name);
        let before = member_multiset(&facts);
        for policy in [Policy::PaperSimple, Policy::NetReduction] {
            let decisions = relocation_candidates(&facts, policy);
            let after = apply_relocations(&facts, &decisions).expect("apply");
            assert_eq!(member_multiset(&after), before, "{name} under {policy:?}");
            let (fixed, _) = isolate(&facts, Iterations::Fixpoint, policy).unwrap();
            assert_eq!(member_multiset(&fixed), before, "{name} fixpoint under {policy:?}");
        }
    }
}

#[test]
fn relocation_conserves_members_on_random_facts() {
    for seed in 0..200u64 {
        let (facts, _) = fuzz::random_case(seed);
        let before = member_multiset(&facts);
        let decisions = relocation_candidates(&facts, Policy::PaperSimple);
        let after = apply_relocations(&facts, &decisions).expect("apply");
        assert_eq!(member_multiset(&after), before, "seed {seed}");
    }
}
