//! Facts-file ingestion. The on-disk format is a JSON document with top-level
//! keys `clusters`, `classes`, `calls`, `accesses`; see the repository README
//! for the full schema.

use super::{CodeFacts, TypeKind};
use crate::error::FactsError;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseMode {
    /// Unknown keys are a `SchemaError`.
    Strict,
    /// Unknown keys produce warnings.
    Lenient,
}

/// Parse a facts document in strict mode. The result is normalized
/// (order-insensitive for class and edge lists) and referentially resolved.
pub fn parse_facts(text: &str) -> Result<CodeFacts, FactsError> {
    let (facts, _warnings) = parse_with_mode(text, ParseMode::Strict)?;
    Ok(facts)
}

/// Parse in lenient mode, returning warnings for unknown keys.
pub fn parse_facts_lenient(text: &str) -> Result<(CodeFacts, Vec<String>), FactsError> {
    parse_with_mode(text, ParseMode::Lenient)
}

pub fn parse_with_mode(
    text: &str,
    mode: ParseMode,
) -> Result<(CodeFacts, Vec<String>), FactsError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| FactsError::Syntax(e.to_string()))?;
    let unknown = scan_unknown_keys(&value);
    if !unknown.is_empty() && mode == ParseMode::Strict {
        return Err(FactsError::Schema(format!("unknown keys: {}", unknown.join(", "))));
    }
    let warnings: Vec<String> =
        unknown.into_iter().map(|k| format!("ignoring unknown key {k}")).collect();
    let mut facts: CodeFacts =
        serde_json::from_value(value).map_err(|e| FactsError::Schema(e.to_string()))?;
    facts.normalize();
    check_resolution(&facts)?;
    Ok((facts, warnings))
}

/// Canonical serialization; `parse_facts` of the output round-trips to an
/// equal value.
pub fn serialize_facts(facts: &CodeFacts) -> String {
    let mut normalized = facts.clone();
    normalized.normalize();
    let mut out = serde_json::to_string_pretty(&normalized).expect("facts serialize");
    out.push('\n');
    out
}

/// Parse-time referential integrity: every edge endpoint, extends link, and
/// declared type must resolve. Softer structural invariants (duplicates,
/// cluster membership) are reported by `validate` instead.
fn check_resolution(facts: &CodeFacts) -> Result<(), FactsError> {
    let mut dangling = Vec::new();
    for call in &facts.calls {
        for mref in [&call.from, &call.to] {
            if facts.resolve_method(mref).is_none() {
                dangling.push(format!("method '{mref}'"));
            }
        }
    }
    for access in &facts.accesses {
        if facts.resolve_method(&access.from).is_none() {
            dangling.push(format!("method '{}'", access.from));
        }
        if facts.resolve_field(&access.field).is_none() {
            dangling.push(format!("field '{}'", access.field));
        }
    }
    for class in &facts.classes {
        if let Some(parent) = &class.extends {
            if facts.class(parent).is_none() {
                dangling.push(format!("extends target '{parent}' of class '{}'", class.name));
            }
        }
        for field in &class.fields {
            if field.ty.kind == TypeKind::Declared {
                match &field.ty.class_name {
                    Some(t) if facts.class(t).is_some() => {}
                    Some(t) => dangling.push(format!("type '{t}' of field '{}.{}'", class.name, field.name)),
                    None => dangling.push(format!(
                        "declared type of field '{}.{}' missing class name",
                        class.name, field.name
                    )),
                }
            }
        }
        for method in &class.methods {
            let types = method.params.iter().chain(method.return_type.iter());
            for ty in types {
                if ty.kind == TypeKind::Declared {
                    match &ty.class_name {
                        Some(t) if facts.class(t).is_some() => {}
                        Some(t) => dangling
                            .push(format!("type '{t}' in signature of '{}.{}'", class.name, method.name)),
                        None => dangling.push(format!(
                            "declared type in signature of '{}.{}' missing class name",
                            class.name, method.name
                        )),
                    }
                }
            }
        }
    }
    if dangling.is_empty() {
        Ok(())
    } else {
        dangling.sort();
        dangling.dedup();
        Err(FactsError::Schema(format!("dangling references: {}", dangling.join(", "))))
    }
}

const ROOT_KEYS: &[&str] = &["clusters", "classes", "calls", "accesses"];
const CLASS_KEYS: &[&str] = &[
    "name",
    "cluster",
    "singleton",
    "private_constructor",
    "extends",
    "fields",
    "methods",
];
const FIELD_KEYS: &[&str] = &["name", "type", "static", "visibility"];
const TYPE_KEYS: &[&str] = &["kind", "class"];
const METHOD_KEYS: &[&str] =
    &["name", "params", "return", "constructor", "constructor_model", "effects"];
const CTOR_MODEL_KEYS: &[&str] = &["defaults", "counter", "delta"];
const CALL_KEYS: &[&str] = &["from", "to", "count"];
const ACCESS_KEYS: &[&str] = &["from", "field", "mode"];
const EFFECT_KEYS: &[&str] =
    &["effect", "class", "dest", "target", "path", "value", "field", "receiver", "method", "args", "index"];
const OPERAND_KEYS: &[&str] = &["kind", "index", "name", "value"];

fn scan_unknown_keys(value: &Value) -> Vec<String> {
    let mut unknown = Vec::new();
    check_object(value, ROOT_KEYS, "$", &mut unknown);
    let obj = match value.as_object() {
        Some(o) => o,
        None => return unknown,
    };
    if let Some(classes) = obj.get("classes").and_then(Value::as_array) {
        for (i, class) in classes.iter().enumerate() {
            let at = format!("$.classes[{i}]");
            check_object(class, CLASS_KEYS, &at, &mut unknown);
            scan_members(class, &at, &mut unknown);
        }
    }
    scan_edge_list(obj.get("calls"), CALL_KEYS, "calls", &mut unknown);
    scan_edge_list(obj.get("accesses"), ACCESS_KEYS, "accesses", &mut unknown);
    unknown
}

fn scan_members(class: &Value, at: &str, unknown: &mut Vec<String>) {
    if let Some(fields) = class.get("fields").and_then(Value::as_array) {
        for (i, field) in fields.iter().enumerate() {
            let fat = format!("{at}.fields[{i}]");
            check_object(field, FIELD_KEYS, &fat, unknown);
            if let Some(ty) = field.get("type") {
                check_object(ty, TYPE_KEYS, &format!("{fat}.type"), unknown);
            }
        }
    }
    if let Some(methods) = class.get("methods").and_then(Value::as_array) {
        for (i, method) in methods.iter().enumerate() {
            let mat = format!("{at}.methods[{i}]");
            check_object(method, METHOD_KEYS, &mat, unknown);
            if let Some(params) = method.get("params").and_then(Value::as_array) {
                for (j, p) in params.iter().enumerate() {
                    check_object(p, TYPE_KEYS, &format!("{mat}.params[{j}]"), unknown);
                }
            }
            if let Some(ret) = method.get("return") {
                if ret.is_object() {
                    check_object(ret, TYPE_KEYS, &format!("{mat}.return"), unknown);
                }
            }
            if let Some(model) = method.get("constructor_model") {
                check_object(model, CTOR_MODEL_KEYS, &format!("{mat}.constructor_model"), unknown);
            }
            if let Some(effects) = method.get("effects").and_then(Value::as_array) {
                for (j, e) in effects.iter().enumerate() {
                    scan_effect(e, &format!("{mat}.effects[{j}]"), unknown);
                }
            }
        }
    }
}

fn scan_effect(effect: &Value, at: &str, unknown: &mut Vec<String>) {
    check_object(effect, EFFECT_KEYS, at, unknown);
    for key in ["target", "value", "receiver"] {
        if let Some(op) = effect.get(key) {
            if op.is_object() {
                check_object(op, OPERAND_KEYS, &format!("{at}.{key}"), unknown);
            }
        }
    }
    if let Some(args) = effect.get("args").and_then(Value::as_array) {
        for (i, a) in args.iter().enumerate() {
            if a.is_object() {
                check_object(a, OPERAND_KEYS, &format!("{at}.args[{i}]"), unknown);
            }
        }
    }
}

fn scan_edge_list(list: Option<&Value>, keys: &[&str], label: &str, unknown: &mut Vec<String>) {
    if let Some(edges) = list.and_then(Value::as_array) {
        for (i, edge) in edges.iter().enumerate() {
            check_object(edge, keys, &format!("$.{label}[{i}]"), unknown);
        }
    }
}

fn check_object(value: &Value, allowed: &[&str], at: &str, unknown: &mut Vec<String>) {
    if let Some(obj) = value.as_object() {
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                unknown.push(format!("{at}.{key}"));
            }
        }
    }
}
