//! Canonical heap fingerprints. Two final states get the same fingerprint
//! iff their reachable object graphs are isomorphic (same shape, classes,
//! field values, and aliasing), their observable statics agree, and their
//! counters agree — regardless of how object ids were assigned.

use super::{FinalState, Oid, Value};
use std::collections::BTreeMap;
use std::fmt::Write;

/// Render `state` as a canonical string. Objects are numbered by a BFS over
/// the scenario roots in name order, then over the statics view in key
/// order; back-edges reuse the already-assigned number, so aliasing is
/// captured and concrete oid values are not.
pub fn heap_fingerprint(state: &FinalState) -> String {
    let mut canon = Canonicalizer { state, ids: BTreeMap::new(), table: Vec::new() };

    let mut out = String::new();
    out.push_str("roots:\n");
    for (name, placed) in &state.roots {
        let rendered = canon.visit(&placed.context, &placed.value);
        let _ = writeln!(out, "  {name} = {rendered}");
    }
    out.push_str("statics:\n");
    for (key, placed) in &state.statics_view {
        let rendered = canon.visit(&placed.context, &placed.value);
        let _ = writeln!(out, "  {key} = {rendered}");
    }
    out.push_str("objects:\n");
    // `table` grows while we render it: rendering one object can discover
    // new ones (fields not reachable through an earlier root).
    let mut index = 0;
    while index < canon.table.len() {
        let (context, oid) = canon.table[index].clone();
        let line = canon.render_object(&context, oid, index);
        let _ = writeln!(out, "  {line}");
        index += 1;
    }
    out.push_str("counters:\n");
    for (name, value) in &state.counters {
        let _ = writeln!(out, "  {name} = {value}");
    }
    out
}

struct Canonicalizer<'a> {
    state: &'a FinalState,
    /// (context, oid) -> canonical number.
    ids: BTreeMap<(String, Oid), usize>,
    /// Canonical number -> (context, oid), in discovery order.
    table: Vec<(String, Oid)>,
}

impl<'a> Canonicalizer<'a> {
    /// Render a value in `context`, assigning a canonical number to any
    /// newly discovered object.
    fn visit(&mut self, context: &str, value: &Value) -> String {
        match value {
            Value::Int(i) => format!("int:{i}"),
            Value::Str(s) => format!("str:{s:?}"),
            Value::Bool(b) => format!("bool:{b}"),
            Value::Null => "null".to_string(),
            Value::Ref(oid) => format!("#{}", self.number(context, *oid)),
            Value::Remote(gid) => match self.state.gid_table.get(&gid.to_string()) {
                Some((owner_ctx, oid)) => {
                    let owner_ctx = owner_ctx.clone();
                    format!("#{}", self.number(&owner_ctx, *oid))
                }
                None => format!("remote:?{gid}"),
            },
        }
    }

    fn number(&mut self, context: &str, oid: Oid) -> usize {
        let key = (context.to_string(), oid);
        if let Some(&n) = self.ids.get(&key) {
            return n;
        }
        let n = self.table.len();
        self.ids.insert(key.clone(), n);
        self.table.push(key);
        n
    }

    fn render_object(&mut self, context: &str, oid: Oid, number: usize) -> String {
        let Some(ctx) = self.state.contexts.get(context) else {
            return format!("#{number} <missing context {context}>");
        };
        let Some(obj) = ctx.heap.get(oid) else {
            return format!("#{number} <dangling>");
        };
        let fields = obj.fields.clone();
        let class = obj.class_name.clone();
        let mut parts = Vec::with_capacity(fields.len());
        for (name, value) in &fields {
            parts.push(format!("{name}={}", self.visit(context, value)));
        }
        format!("#{number} {class}{{{}}}", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{ContextState, PlacedValue};

    fn place(value: Value) -> PlacedValue {
        PlacedValue { context: "main".to_string(), value }
    }

    #[test]
    fn fingerprint_ignores_oid_assignment() {
        // Two states with the same shape (a -> b via `next`) but different
        // allocation orders must fingerprint identically.
        let build = |first: &str, second: &str| {
            let mut ctx = ContextState::default();
            let x = ctx.heap.alloc(first);
            let y = ctx.heap.alloc(second);
            // Pick whichever oid holds class "A" as the root.
            let (root, leaf) = if first == "A" { (x, y) } else { (y, x) };
            ctx.heap.get_mut(root).unwrap().fields.insert("next".into(), Value::Ref(leaf));
            ctx.heap.get_mut(leaf).unwrap().fields.insert("next".into(), Value::Null);
            FinalState {
                roots: [("a".to_string(), place(Value::Ref(root)))].into(),
                contexts: [("main".to_string(), ctx)].into(),
                ..FinalState::default()
            }
        };
        assert_eq!(heap_fingerprint(&build("A", "B")), heap_fingerprint(&build("B", "A")));
    }

    #[test]
    fn aliasing_distinguishes_shared_from_copied() {
        // One shared leaf vs two equal-valued leaves: same field values,
        // different shape, different fingerprints.
        let shared = {
            let mut ctx = ContextState::default();
            let root = ctx.heap.alloc("P");
            let leaf = ctx.heap.alloc("L");
            ctx.heap.get_mut(leaf).unwrap().fields.insert("v".into(), Value::Int(1));
            let obj = ctx.heap.get_mut(root).unwrap();
            obj.fields.insert("l".into(), Value::Ref(leaf));
            obj.fields.insert("r".into(), Value::Ref(leaf));
            FinalState {
                roots: [("p".to_string(), place(Value::Ref(root)))].into(),
                contexts: [("main".to_string(), ctx)].into(),
                ..FinalState::default()
            }
        };
        let copied = {
            let mut ctx = ContextState::default();
            let root = ctx.heap.alloc("P");
            let l = ctx.heap.alloc("L");
            let r = ctx.heap.alloc("L");
            ctx.heap.get_mut(l).unwrap().fields.insert("v".into(), Value::Int(1));
            ctx.heap.get_mut(r).unwrap().fields.insert("v".into(), Value::Int(1));
            let obj = ctx.heap.get_mut(root).unwrap();
            obj.fields.insert("l".into(), Value::Ref(l));
            obj.fields.insert("r".into(), Value::Ref(r));
            FinalState {
                roots: [("p".to_string(), place(Value::Ref(root)))].into(),
                contexts: [("main".to_string(), ctx)].into(),
                ..FinalState::default()
            }
        };
        assert_ne!(heap_fingerprint(&shared), heap_fingerprint(&copied));
    }

    #[test]
    fn cycles_terminate() {
        let mut ctx = ContextState::default();
        let a = ctx.heap.alloc("C");
        let b = ctx.heap.alloc("C");
        ctx.heap.get_mut(a).unwrap().fields.insert("next".into(), Value::Ref(b));
        ctx.heap.get_mut(b).unwrap().fields.insert("next".into(), Value::Ref(a));
        let state = FinalState {
            roots: [("c".to_string(), place(Value::Ref(a)))].into(),
            contexts: [("main".to_string(), ctx)].into(),
            ..FinalState::default()
        };
        let fp = heap_fingerprint(&state);
        assert!(fp.contains("#0"), "{fp}");
        assert!(fp.contains("#1"), "{fp}");
    }
}
