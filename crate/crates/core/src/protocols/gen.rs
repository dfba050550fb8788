//! Synthetic workloads with known closed-form costs, used by the bench
//! subcommand and the cost-asymmetry tests.

use crate::facts::{
    CallEdge, ClassDecl, CodeFacts, Effect, FieldDecl, Literal, MethodDecl, MethodRef, Operand,
    TypeRef, Visibility,
};
use crate::simcore::{Arg, ScenarioScript, Step};

fn field(name: &str, ty: TypeRef) -> FieldDecl {
    FieldDecl { name: name.to_string(), ty, is_static: false, visibility: Visibility::Public }
}

/// A chain of `depth` single-class clusters where each `Ci.build` constructs
/// its own node, asks the next cluster to build the rest, and links the two.
///
/// Total resident objects after `C1.build`:
/// - monolith and ID passing: `depth` (each node exists once),
/// - JSON passing: `depth * (depth + 1) / 2` (service i keeps its own node
///   plus a deserialized copy of the entire suffix it received).
pub fn gen_chain_scenario(depth: usize) -> (CodeFacts, ScenarioScript) {
    assert!(depth >= 1, "chain depth must be at least 1");
    let class_name = |i: usize| format!("C{i}");
    let mut classes = Vec::with_capacity(depth);
    let mut calls = Vec::new();
    for i in 1..=depth {
        let name = class_name(i);
        let next_type = if i < depth { class_name(i + 1) } else { name.clone() };
        let mut effects = vec![Effect::Construct { class: name.clone(), dest: "l".to_string() }];
        if i < depth {
            effects.push(Effect::Call {
                receiver: crate::facts::Callee::Class { name: class_name(i + 1) },
                method: "build".to_string(),
                args: vec![],
                dest: Some("m".to_string()),
            });
            effects.push(Effect::SetField {
                target: Operand::Local { name: "l".to_string() },
                path: "next".to_string(),
                value: Operand::Local { name: "m".to_string() },
            });
            calls.push(CallEdge {
                from: MethodRef::new(&name, "build", 0),
                to: MethodRef::new(class_name(i + 1), "build", 0),
                count: 1,
            });
        }
        effects.push(Effect::Return { value: Operand::Local { name: "l".to_string() } });
        classes.push(ClassDecl {
            name: name.clone(),
            cluster: format!("c{i}"),
            is_singleton: false,
            has_private_constructor: false,
            extends: None,
            fields: vec![field("next", TypeRef::declared(next_type))],
            methods: vec![MethodDecl {
                name: "build".to_string(),
                params: vec![],
                return_type: Some(TypeRef::declared(&name)),
                is_constructor: false,
                constructor_model: None,
                effects,
            }],
        });
    }
    let mut facts = CodeFacts {
        clusters: (1..=depth).map(|i| format!("c{i}")).collect(),
        classes,
        calls,
        accesses: vec![],
    };
    facts.normalize();

    let scenario = ScenarioScript {
        client: Some("c1".to_string()),
        steps: vec![Step::Call {
            target: "C1".to_string(),
            method: "build".to_string(),
            args: vec![],
            capture: Some("x".to_string()),
        }],
    };
    (facts, scenario)
}

/// A two-cluster workload: the client builds a linked list of `size` nodes
/// and passes its head to one server API call.
///
/// Each node serializes as one object plus two field slots, so the JSON
/// request costs exactly `3 * size` payload units (the per-node constant is
/// k = 3: the object, its primitive `val` slot, and its `next` slot). The
/// ID request costs 1 unit — the head's id — independent of `size`.
pub fn gen_payload_scenario(size: usize) -> (CodeFacts, ScenarioScript) {
    assert!(size >= 1, "payload list size must be at least 1");
    let mut facts = CodeFacts {
        clusters: ["client".to_string(), "server".to_string()].into_iter().collect(),
        classes: vec![
            ClassDecl {
                name: "Node".to_string(),
                cluster: "client".to_string(),
                is_singleton: false,
                has_private_constructor: false,
                extends: None,
                fields: vec![
                    field("val", TypeRef::primitive()),
                    field("next", TypeRef::declared("Node")),
                ],
                methods: vec![],
            },
            ClassDecl {
                name: "Main".to_string(),
                cluster: "client".to_string(),
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
            ClassDecl {
                name: "Api".to_string(),
                cluster: "server".to_string(),
                is_singleton: false,
                has_private_constructor: false,
                extends: None,
                fields: vec![],
                methods: vec![MethodDecl {
                    name: "process".to_string(),
                    params: vec![TypeRef::declared("Node")],
                    return_type: Some(TypeRef::primitive()),
                    is_constructor: false,
                    constructor_model: None,
                    effects: vec![Effect::Return { value: Operand::Lit { value: Literal::Int(1) } }],
                }],
            },
        ],
        calls: vec![CallEdge {
            from: MethodRef::new("Main", "run", 0),
            to: MethodRef::new("Api", "process", 1),
            count: 1,
        }],
        accesses: vec![],
    };
    facts.normalize();

    let mut steps = Vec::new();
    for i in 1..=size {
        steps.push(Step::New { var: format!("n{i}"), class: "Node".to_string() });
        steps.push(Step::Set {
            path: format!("n{i}.val").parse().expect("path"),
            value: Literal::Int(i as i64),
        });
    }
    for i in 1..size {
        steps.push(Step::Setref {
            path: format!("n{i}.next").parse().expect("path"),
            source: format!("n{}", i + 1).parse().expect("path"),
        });
    }
    steps.push(Step::Call {
        target: "Api".to_string(),
        method: "process".to_string(),
        args: vec![Arg::Var { var: "n1".to_string() }],
        capture: Some("r".to_string()),
    });
    let scenario = ScenarioScript { client: Some("client".to_string()), steps };
    (facts, scenario)
}
