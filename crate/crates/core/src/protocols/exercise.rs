//! Turn a classified API into an executable probe: a scenario that calls
//! the API across the cluster boundary, plus the expectation the comparison
//! should meet. Used to check the classifier against the simulator instead
//! of only against hand oracles.

use crate::classify::{ApiClassification, ApiKind, TransferCategory};
use crate::facts::{CodeFacts, Effect, FieldDecl, Literal, MethodRef, Operand, TypeKind, TypeRef, Visibility};
use crate::simcore::{Arg, ScenarioScript, Step};

/// One executable probe for a classified API.
pub struct ApiExercise {
    /// Facts to run against; for static probes this differs from the input
    /// facts by one injected static write.
    pub facts: CodeFacts,
    pub scenario: ScenarioScript,
    /// Whether JSON passing is expected to produce loss findings.
    pub expect_loss: bool,
}

/// Build a probe for `entry`, or `None` when the category has no executable
/// probe here (library and resource members have no interpretable body, and
/// `Referenced`/`Singleton` losses depend on surrounding state this helper
/// does not synthesize).
pub fn exercise_api(facts: &CodeFacts, entry: &ApiClassification) -> Option<ApiExercise> {
    if entry.api.kind != ApiKind::Method {
        return None;
    }
    match entry.primary {
        TransferCategory::PassJson => benign_probe(facts, entry),
        TransferCategory::Static => static_probe(facts, entry),
        _ => None,
    }
}

/// Call the API once from a consuming cluster with fresh arguments. A sound
/// `PassJson` label means the JSON engine must finish without findings and
/// match the monolith fingerprint.
///
/// No probe is generated when a declared parameter type carries a
/// constructor-replay or private-field hazard: those are runtime loss modes
/// outside the four transfer-safety categories, so a benign probe would test
/// the wrong property.
fn benign_probe(facts: &CodeFacts, entry: &ApiClassification) -> Option<ApiExercise> {
    for param in &entry.api.param_types {
        if let Some(class) = (param.kind == TypeKind::Declared)
            .then(|| param.class_name.as_deref())
            .flatten()
        {
            if transfer_hazard(facts, class) {
                return None;
            }
        }
    }
    let (scenario, _) = call_scenario(facts, entry)?;
    Some(ApiExercise { facts: facts.clone(), scenario, expect_loss: false })
}

/// Whether serializing an instance of `class` (or anything reachable from it
/// through declared fields) replays constructor side effects or exposes
/// private fields.
fn transfer_hazard(facts: &CodeFacts, class: &str) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    let mut stack = vec![class.to_string()];
    while let Some(name) = stack.pop() {
        if !seen.insert(name.clone()) {
            continue;
        }
        let Some(decl) = facts.class(&name) else { continue };
        let replays = decl
            .constructor()
            .and_then(|m| m.constructor_model.as_ref())
            .map(|model| model.delta != 0)
            .unwrap_or(false);
        if replays || decl.fields.iter().any(|f| f.visibility == Visibility::Private) {
            return true;
        }
        for field in &decl.fields {
            if field.ty.kind == TypeKind::Declared {
                if let Some(target) = &field.ty.class_name {
                    stack.push(target.clone());
                }
            }
        }
    }
    false
}

/// Same call, but with one static write injected into the method body. The
/// `Static` label warned about exactly this: under JSON passing the write
/// lands on the server replica and the client never sees it.
fn static_probe(facts: &CodeFacts, entry: &ApiClassification) -> Option<ApiExercise> {
    let mref: MethodRef = entry.api.member.parse().ok()?;
    let mut facts = facts.clone();
    let class = facts.classes.iter_mut().find(|c| c.name == mref.class)?;
    if class.field("probe_s").is_none() {
        class.fields.push(FieldDecl {
            name: "probe_s".to_string(),
            ty: TypeRef::primitive(),
            is_static: true,
            visibility: Visibility::Public,
        });
    }
    let method = class
        .methods
        .iter_mut()
        .find(|m| m.name == mref.method && m.arity() == mref.arity)?;
    // Injected before any Return so it always executes.
    method.effects.insert(
        0,
        Effect::SetStatic {
            class: mref.class.clone(),
            field: "probe_s".to_string(),
            value: Operand::Lit { value: Literal::Int(42) },
        },
    );
    facts.normalize();
    let (scenario, _) = call_scenario(&facts, entry)?;
    Some(ApiExercise { facts, scenario, expect_loss: true })
}

/// A minimal scenario invoking the API as a class-target call from one of
/// its client clusters, with a fresh instance per declared parameter and a
/// literal per primitive one.
fn call_scenario(facts: &CodeFacts, entry: &ApiClassification) -> Option<(ScenarioScript, usize)> {
    let mref: MethodRef = entry.api.member.parse().ok()?;
    let client = entry.api.client_clusters.iter().next()?.clone();
    let mut steps = Vec::new();
    let mut args = Vec::new();
    for (i, param) in entry.api.param_types.iter().enumerate() {
        match param.kind {
            TypeKind::Declared => {
                let class = param.class_name.clone()?;
                facts.class(&class)?;
                let var = format!("a{i}");
                steps.push(Step::New { var: var.clone(), class });
                args.push(Arg::Var { var });
            }
            TypeKind::Primitive => args.push(Arg::Lit { lit: Literal::Int(1) }),
            TypeKind::Library | TypeKind::Resource => {
                args.push(Arg::Lit { lit: Literal::Null })
            }
        }
    }
    let call_index = steps.len();
    steps.push(Step::Call {
        target: mref.class.clone(),
        method: mref.method.clone(),
        args,
        capture: Some("out".to_string()),
    });
    Some((ScenarioScript { client: Some(client), steps }, call_index))
}
