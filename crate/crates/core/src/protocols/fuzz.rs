//! Seeded random facts + scenario generation. Used to check that the ID
//! protocol is observationally equivalent to the monolith on arbitrary
//! inputs, not just on the curated fixtures. Method bodies stay shallow
//! (nested calls only reach leaf methods), which keeps cases interpretable
//! without narrowing the state space that matters: aliasing, cross-cluster
//! ownership, statics, singletons, and constructor side effects.

use crate::facts::{
    Callee, ClassDecl, CodeFacts, ConstructorModel, Effect, FieldDecl, Literal, MethodDecl,
    Operand, TypeKind, TypeRef, Visibility,
};
use crate::simcore::{Arg, ScenarioScript, Step};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generate one random, schema-valid case from `seed`. Deterministic: the
/// same seed always yields the same facts and scenario, across platforms
/// and releases (ChaCha8 is a stable stream, unlike the default rng).
pub fn random_case(seed: u64) -> (CodeFacts, ScenarioScript) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let facts = random_facts(&mut rng);
    let scenario = random_scenario(&mut rng, &facts);
    (facts, scenario)
}

fn random_facts(rng: &mut ChaCha8Rng) -> CodeFacts {
    let n_clusters = rng.gen_range(2..=5usize);
    let clusters: Vec<String> = (1..=n_clusters).map(|i| format!("k{i}")).collect();
    let n_classes = rng.gen_range(3..=6usize);
    let names: Vec<String> = (0..n_classes).map(|i| format!("G{i}")).collect();

    let mut classes = Vec::with_capacity(n_classes);
    for name in &names {
        let cluster = clusters[rng.gen_range(0..clusters.len())].clone();
        let is_singleton = rng.gen_bool(0.1);

        let n_fields = rng.gen_range(1..=3usize);
        let mut fields = Vec::new();
        for f in 0..n_fields {
            let ty = if rng.gen_bool(0.6) {
                TypeRef::primitive()
            } else {
                TypeRef::declared(names[rng.gen_range(0..names.len())].clone())
            };
            fields.push(FieldDecl {
                name: format!("f{f}"),
                ty,
                is_static: false,
                visibility: Visibility::Public,
            });
        }

        let mut methods = Vec::new();
        // "poke": mutate own state from a primitive argument, maybe write a
        // static, maybe echo the argument back.
        let mut effects = Vec::new();
        if let Some(prim) = fields.iter().find(|f| f.ty.kind == TypeKind::Primitive) {
            effects.push(Effect::SetField {
                target: Operand::This,
                path: prim.name.clone(),
                value: Operand::Param { index: 0 },
            });
        }
        if rng.gen_bool(0.3) {
            fields.push(FieldDecl {
                name: "s".to_string(),
                ty: TypeRef::primitive(),
                is_static: true,
                visibility: Visibility::Public,
            });
            effects.push(Effect::SetStatic {
                class: name.clone(),
                field: "s".to_string(),
                value: Operand::Param { index: 0 },
            });
        }
        if rng.gen_bool(0.2) {
            // Nested call to a leaf method of a random class.
            let target = names[rng.gen_range(0..names.len())].clone();
            effects.push(Effect::Call {
                receiver: Callee::Class { name: target },
                method: "mk".to_string(),
                args: vec![],
                dest: Some("t".to_string()),
            });
        }
        if rng.gen_bool(0.5) {
            effects.push(Effect::Return { value: Operand::Param { index: 0 } });
        }
        methods.push(MethodDecl {
            name: "poke".to_string(),
            params: vec![TypeRef::primitive()],
            return_type: Some(TypeRef::primitive()),
            is_constructor: false,
            constructor_model: None,
            effects,
        });
        // "mk": leaf factory.
        methods.push(MethodDecl {
            name: "mk".to_string(),
            params: vec![],
            return_type: Some(TypeRef::declared(name.clone())),
            is_constructor: false,
            constructor_model: None,
            effects: vec![
                Effect::Construct { class: name.clone(), dest: "t".to_string() },
                Effect::Return { value: Operand::Local { name: "t".to_string() } },
            ],
        });
        if rng.gen_bool(0.25) {
            methods.push(MethodDecl {
                name: name.clone(),
                params: vec![],
                return_type: None,
                is_constructor: true,
                constructor_model: Some(ConstructorModel {
                    defaults: [("f0".to_string(), Literal::Int(5))].into(),
                    counter: Some(format!("ctor.{name}")),
                    delta: 1,
                }),
                effects: vec![],
            });
        }
        classes.push(ClassDecl {
            name: name.clone(),
            cluster,
            is_singleton,
            has_private_constructor: false,
            extends: None,
            fields,
            methods,
        });
    }

    let mut facts = CodeFacts {
        clusters: clusters.into_iter().collect(),
        classes,
        calls: vec![],
        accesses: vec![],
    };
    facts.normalize();
    facts
}

fn random_scenario(rng: &mut ChaCha8Rng, facts: &CodeFacts) -> ScenarioScript {
    let class_names: Vec<&str> = facts.classes.iter().map(|c| c.name.as_str()).collect();
    let mut steps = Vec::new();
    // vars holding objects, with the class they were created as.
    let mut vars: Vec<(String, String)> = Vec::new();
    let mut next_var = 0usize;
    let fresh = |next_var: &mut usize| {
        let v = format!("v{next_var}");
        *next_var += 1;
        v
    };

    let n_steps = rng.gen_range(6..=14usize);
    // Always start with a concrete object so paths have something to hit.
    {
        let class = class_names[rng.gen_range(0..class_names.len())].to_string();
        let var = fresh(&mut next_var);
        steps.push(Step::New { var: var.clone(), class: class.clone() });
        vars.push((var, class));
    }
    for _ in 0..n_steps {
        match rng.gen_range(0..6) {
            0 => {
                let class = class_names[rng.gen_range(0..class_names.len())].to_string();
                let var = fresh(&mut next_var);
                steps.push(Step::New { var: var.clone(), class: class.clone() });
                vars.push((var, class));
            }
            1 => {
                // Write a primitive field of a random var's class.
                let (var, class) = &vars[rng.gen_range(0..vars.len())];
                let prim = facts
                    .class(class)
                    .and_then(|c| c.fields.iter().find(|f| f.ty.kind == TypeKind::Primitive));
                if let Some(f) = prim {
                    steps.push(Step::Set {
                        path: format!("{var}.{}", f.name).parse().expect("path"),
                        value: Literal::Int(rng.gen_range(-5..100)),
                    });
                }
            }
            2 => {
                // Link one var's declared field to another var.
                let (var, class) = vars[rng.gen_range(0..vars.len())].clone();
                let (src, _) = vars[rng.gen_range(0..vars.len())].clone();
                let decl = facts
                    .class(&class)
                    .and_then(|c| c.fields.iter().find(|f| f.ty.kind == TypeKind::Declared));
                if let Some(f) = decl {
                    steps.push(Step::Setref {
                        path: format!("{var}.{}", f.name).parse().expect("path"),
                        source: src.parse().expect("path"),
                    });
                }
            }
            3 => {
                // Alias through a declared field; may read null at runtime.
                let (var, class) = vars[rng.gen_range(0..vars.len())].clone();
                let decl = facts
                    .class(&class)
                    .and_then(|c| c.fields.iter().find(|f| f.ty.kind == TypeKind::Declared))
                    .cloned();
                if let Some(f) = decl {
                    let alias = fresh(&mut next_var);
                    steps.push(Step::Alias {
                        var: alias.clone(),
                        path: format!("{var}.{}", f.name).parse().expect("path"),
                    });
                    if let Some(target) = f.ty.class_name {
                        vars.push((alias, target));
                    }
                }
            }
            4 => {
                // Instance call, or a class-target factory call.
                if rng.gen_bool(0.5) {
                    let (var, _) = vars[rng.gen_range(0..vars.len())].clone();
                    steps.push(Step::Call {
                        target: var,
                        method: "poke".to_string(),
                        args: vec![Arg::Lit { lit: Literal::Int(rng.gen_range(0..50)) }],
                        capture: None,
                    });
                } else {
                    let class = class_names[rng.gen_range(0..class_names.len())].to_string();
                    let var = fresh(&mut next_var);
                    steps.push(Step::Call {
                        target: class.clone(),
                        method: "mk".to_string(),
                        args: vec![],
                        capture: Some(var.clone()),
                    });
                    vars.push((var, class));
                }
            }
            _ => {
                // Assert on a primitive field; mismatches are recorded, not
                // fatal, and must be recorded identically by every engine.
                let (var, class) = &vars[rng.gen_range(0..vars.len())];
                let prim = facts
                    .class(class)
                    .and_then(|c| c.fields.iter().find(|f| f.ty.kind == TypeKind::Primitive));
                if let Some(f) = prim {
                    steps.push(Step::Assert {
                        path: format!("{var}.{}", f.name).parse().expect("path"),
                        value: Literal::Int(rng.gen_range(-5..100)),
                    });
                }
            }
        }
    }
    ScenarioScript { client: None, steps }
}
