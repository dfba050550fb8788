//! Component detection checked against an independent brute-force oracle on
//! randomly generated intra-class graphs.

mod common;

use microsplit_core::facts::{
    AccessEdge, AccessMode, CallEdge, ClassDecl, CodeFacts, FieldDecl, FieldRef, MethodDecl,
    MethodRef, TypeRef, Visibility,
};
use microsplit_core::isolation::{build_intraclass_graph, disconnected_subgraphs, NodeRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// One class with `n_methods` + `n_fields` members and random intra-class
/// edges, plus decoy inter-class edges that must not affect components.
fn random_single_class(rng: &mut ChaCha8Rng) -> CodeFacts {
    let n_methods = rng.gen_range(1..=120usize);
    let n_fields = rng.gen_range(0..=80usize);
    let methods: Vec<MethodDecl> = (0..n_methods)
        .map(|i| MethodDecl {
            name: format!("m{i}"),
            params: vec![],
            return_type: None,
            is_constructor: false,
            constructor_model: None,
            effects: vec![],
        })
        .collect();
    let fields: Vec<FieldDecl> = (0..n_fields)
        .map(|i| FieldDecl {
            name: format!("f{i}"),
            ty: TypeRef::primitive(),
            is_static: false,
            visibility: Visibility::Public,
        })
        .collect();

    let mut calls = Vec::new();
    let mut accesses = Vec::new();
    let n_edges = rng.gen_range(0..=(n_methods + n_fields) * 2);
    for _ in 0..n_edges {
        let from = MethodRef::new("C", format!("m{}", rng.gen_range(0..n_methods)), 0);
        if n_fields > 0 && rng.gen_bool(0.4) {
            accesses.push(AccessEdge {
                from,
                field: FieldRef::new("C", format!("f{}", rng.gen_range(0..n_fields))),
                mode: if rng.gen_bool(0.5) { AccessMode::Read } else { AccessMode::Write },
            });
        } else {
            calls.push(CallEdge {
                from,
                to: MethodRef::new("C", format!("m{}", rng.gen_range(0..n_methods)), 0),
                count: 1,
            });
        }
    }
    // Decoy: edges touching another class must be ignored by C's graph.
    calls.push(CallEdge {
        from: MethodRef::new("C", "m0", 0),
        to: MethodRef::new("Other", "run", 0),
        count: 1,
    });

    let mut facts = CodeFacts {
        clusters: ["k1".to_string(), "k2".to_string()].into_iter().collect(),
        classes: vec![
            ClassDecl {
                name: "C".to_string(),
                cluster: "k1".to_string(),
                is_singleton: false,
                has_private_constructor: false,
                extends: None,
                fields,
                methods,
            },
            ClassDecl {
                name: "Other".to_string(),
                cluster: "k2".to_string(),
                is_singleton: false,
                has_private_constructor: false,
                extends: None,
                fields: vec![],
                methods: vec![MethodDecl {
                    name: "run".to_string(),
                    params: vec![],
                    return_type: None,
                    is_constructor: false,
                    constructor_model: None,
                    effects: vec![],
                }],
            },
        ],
        calls,
        accesses,
    };
    facts.normalize();
    facts
}

/// Plain recursive-free DFS over an adjacency list built straight from the
/// facts, independent of the union-find implementation under test.
fn oracle_components(facts: &CodeFacts) -> Vec<BTreeSet<NodeRef>> {
    let class = facts.class("C").expect("class C");
    let mut nodes: Vec<NodeRef> = class
        .methods
        .iter()
        .map(|m| NodeRef::Method(MethodRef::new("C", &m.name, m.arity())))
        .chain(class.fields.iter().map(|f| NodeRef::Field(FieldRef::new("C", &f.name))))
        .collect();
    nodes.sort();
    let index = |n: &NodeRef| nodes.binary_search(n).expect("node indexed");

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut link = |a: NodeRef, b: NodeRef| {
        let (i, j) = (index(&a), index(&b));
        adj[i].push(j);
        adj[j].push(i);
    };
    for call in &facts.calls {
        if call.from.class == "C" && call.to.class == "C" {
            link(NodeRef::Method(call.from.clone()), NodeRef::Method(call.to.clone()));
        }
    }
    for access in &facts.accesses {
        if access.from.class == "C" && access.field.class == "C" {
            link(NodeRef::Method(access.from.clone()), NodeRef::Field(access.field.clone()));
        }
    }

    let mut seen = vec![false; nodes.len()];
    let mut components = Vec::new();
    for start in 0..nodes.len() {
        if seen[start] {
            continue;
        }
        let mut component = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            component.insert(nodes[i].clone());
            stack.extend(adj[i].iter().copied());
        }
        components.push(component);
    }
    components.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    components
}

#[test]
fn components_match_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x150_1A7E);
    for case in 0..1000u32 {
        let facts = random_single_class(&mut rng);
        let graph = build_intraclass_graph(&facts, "C").expect("graph");
        let got: Vec<BTreeSet<NodeRef>> =
            disconnected_subgraphs(&graph).into_iter().map(|s| s.nodes).collect();
        let want = oracle_components(&facts);
        assert_eq!(got, want, "case {case} disagrees with oracle");
    }
}

#[test]
fn ordinals_are_dense_and_start_at_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let facts = random_single_class(&mut rng);
    let graph = build_intraclass_graph(&facts, "C").expect("graph");
    for (i, sub) in disconnected_subgraphs(&graph).iter().enumerate() {
        assert_eq!(sub.ordinal, i + 1);
        assert_eq!(sub.class_name, "C");
    }
}
