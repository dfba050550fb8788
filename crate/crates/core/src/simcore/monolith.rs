//! The monolith reference interpreter: one shared heap, one global static
//! store. Its final state is the ground truth the protocol engines are
//! compared against.

use super::{
    construct_object, AssertFailure, CallTarget, ContextState, FinalState, Path, PlacedValue,
    ScenarioScript, Step, Value,
};
use crate::facts::{Callee, CodeFacts, Effect, MethodDecl, Operand};
use std::collections::BTreeMap;

const MAX_CALL_DEPTH: usize = 32;

/// Execute `scenario` over one shared heap and static store. Deterministic;
/// assertion failures are recorded, not fatal; null dereferences increment a
/// runtime-error counter and skip the offending step.
pub fn run_monolith(facts: &CodeFacts, scenario: &ScenarioScript) -> FinalState {
    let mut interp = Mono { facts, ctx: ContextState::default(), roots: BTreeMap::new(), failures: Vec::new() };
    for (index, step) in scenario.steps.iter().enumerate() {
        interp.step(index, step);
    }
    let Mono { ctx, roots, failures, .. } = interp;
    FinalState {
        roots: roots
            .into_iter()
            .map(|(k, v)| (k, PlacedValue { context: "main".to_string(), value: v }))
            .collect(),
        statics_view: ctx
            .statics
            .iter()
            .map(|(k, v)| (k.clone(), PlacedValue { context: "main".to_string(), value: v.clone() }))
            .collect(),
        counters: ctx.counters.clone(),
        assert_failures: failures,
        gid_table: BTreeMap::new(),
        contexts: [("main".to_string(), ctx)].into(),
    }
}

struct Mono<'a> {
    facts: &'a CodeFacts,
    ctx: ContextState,
    roots: BTreeMap<String, Value>,
    failures: Vec<AssertFailure>,
}

impl<'a> Mono<'a> {
    fn step(&mut self, index: usize, step: &Step) {
        match step {
            Step::New { var, class } => {
                match construct_object(self.facts, class, &mut self.ctx, true) {
                    Some(oid) => {
                        self.roots.insert(var.clone(), Value::Ref(oid));
                    }
                    None => self.ctx.runtime_error(),
                }
            }
            Step::Set { path, value } => {
                let value = Value::from_literal(value);
                if self.write_path(path, value).is_none() {
                    self.ctx.runtime_error();
                }
            }
            Step::Setref { path, source } => match self.read_path(source) {
                Some(value) => {
                    if self.write_path(path, value).is_none() {
                        self.ctx.runtime_error();
                    }
                }
                None => self.ctx.runtime_error(),
            },
            Step::Alias { var, path } => match self.read_path(path) {
                Some(value) => {
                    self.roots.insert(var.clone(), value);
                }
                None => self.ctx.runtime_error(),
            },
            Step::Call { target, method, args, capture } => {
                let (this, class) = match ScenarioScript::resolve_target(self.facts, target) {
                    CallTarget::Class(class) => (Value::Null, class),
                    CallTarget::Var(var) => match self.roots.get(&var).cloned() {
                        Some(Value::Ref(oid)) => {
                            let class = match self.ctx.heap.get(oid) {
                                Some(obj) => obj.class_name.clone(),
                                None => return self.ctx.runtime_error(),
                            };
                            (Value::Ref(oid), class)
                        }
                        _ => return self.ctx.runtime_error(),
                    },
                };
                let arg_values: Option<Vec<Value>> = args
                    .iter()
                    .map(|a| match a {
                        super::Arg::Var { var } => self.roots.get(var).cloned(),
                        super::Arg::Lit { lit } => Some(Value::from_literal(lit)),
                    })
                    .collect();
                let Some(arg_values) = arg_values else {
                    return self.ctx.runtime_error();
                };
                let ret = self.invoke(&class, method, this, arg_values, 0);
                if let (Some(var), Some(value)) = (capture, ret) {
                    self.roots.insert(var.clone(), value);
                }
            }
            Step::Assert { path, value } => match self.read_path(path) {
                Some(actual) if actual.matches_literal(value) => {}
                actual => self.failures.push(AssertFailure {
                    step: index,
                    path: path.to_string(),
                    expected: value.clone(),
                    actual: format!("{actual:?}"),
                }),
            },
        }
    }

    fn read_path(&self, path: &Path) -> Option<Value> {
        let mut value = self.roots.get(&path.root)?.clone();
        for field in &path.fields {
            let Value::Ref(oid) = value else { return None };
            value = self.ctx.heap.get(oid)?.fields.get(field)?.clone();
        }
        Some(value)
    }

    fn write_path(&mut self, path: &Path, value: Value) -> Option<()> {
        let (last, prefix) = path.fields.split_last()?;
        let mut cursor = self.roots.get(&path.root)?.clone();
        for field in prefix {
            let Value::Ref(oid) = cursor else { return None };
            cursor = self.ctx.heap.get(oid)?.fields.get(field)?.clone();
        }
        let Value::Ref(oid) = cursor else { return None };
        let obj = self.ctx.heap.get_mut(oid)?;
        if !obj.fields.contains_key(last) {
            return None;
        }
        obj.fields.insert(last.clone(), value);
        Some(())
    }

    /// Dispatch `method` on `class` and execute its declarative body.
    fn invoke(
        &mut self,
        class: &str,
        method: &str,
        this: Value,
        args: Vec<Value>,
        depth: usize,
    ) -> Option<Value> {
        if depth > MAX_CALL_DEPTH {
            self.ctx.runtime_error();
            return None;
        }
        let Some((_, decl)) = self.facts.lookup_method(class, method, args.len()) else {
            self.ctx.runtime_error();
            return None;
        };
        let decl: MethodDecl = decl.clone();
        if decl.is_constructor {
            let oid = construct_object(self.facts, class, &mut self.ctx, true)?;
            return Some(Value::Ref(oid));
        }
        let mut frame = Frame { this, args, locals: BTreeMap::new() };
        let mut ret = None;
        for effect in &decl.effects {
            if self.apply_effect(effect, &mut frame, &mut ret, depth).is_none() {
                self.ctx.runtime_error();
            }
            if ret.is_some() {
                break;
            }
        }
        ret
    }

    fn apply_effect(
        &mut self,
        effect: &Effect,
        frame: &mut Frame,
        ret: &mut Option<Value>,
        depth: usize,
    ) -> Option<()> {
        match effect {
            Effect::Construct { class, dest } => {
                let oid = construct_object(self.facts, class, &mut self.ctx, true)?;
                frame.locals.insert(dest.clone(), Value::Ref(oid));
            }
            Effect::SetField { target, path, value } => {
                let base = frame.eval(target)?;
                let value = frame.eval(value)?;
                self.write_fields(base, path, value)?;
            }
            Effect::SetStatic { class, field, value } => {
                let value = frame.eval(value)?;
                self.ctx.statics.insert(format!("{class}.{field}"), value);
            }
            Effect::Call { receiver, method, args, dest } => {
                let (this, class) = match receiver {
                    Callee::Class { name } => (Value::Null, name.clone()),
                    Callee::This => self.object_class(frame.this.clone())?,
                    Callee::Param { index } => self.object_class(frame.args.get(*index)?.clone())?,
                    Callee::Local { name } => self.object_class(frame.locals.get(name)?.clone())?,
                };
                let arg_values: Option<Vec<Value>> = args.iter().map(|a| frame.eval(a)).collect();
                let result = self.invoke(&class, method, this, arg_values?, depth + 1);
                if let Some(dest) = dest {
                    frame.locals.insert(dest.clone(), result.unwrap_or(Value::Null));
                }
            }
            Effect::Return { value } => {
                *ret = Some(frame.eval(value)?);
            }
            Effect::RebindParam { index, value } => {
                let value = frame.eval(value)?;
                let slot = frame.args.get_mut(*index)?;
                *slot = value;
            }
        }
        Some(())
    }

    fn object_class(&self, value: Value) -> Option<(Value, String)> {
        let Value::Ref(oid) = value else { return None };
        let class = self.ctx.heap.get(oid)?.class_name.clone();
        Some((Value::Ref(oid), class))
    }

    /// Write through a dot-separated field path rooted at `base`.
    fn write_fields(&mut self, base: Value, path: &str, value: Value) -> Option<()> {
        let mut segments: Vec<&str> = path.split('.').collect();
        let last = segments.pop()?;
        let mut cursor = base;
        for field in segments {
            let Value::Ref(oid) = cursor else { return None };
            cursor = self.ctx.heap.get(oid)?.fields.get(field)?.clone();
        }
        let Value::Ref(oid) = cursor else { return None };
        let obj = self.ctx.heap.get_mut(oid)?;
        if !obj.fields.contains_key(last) {
            return None;
        }
        obj.fields.insert(last.to_string(), value);
        Some(())
    }
}

struct Frame {
    this: Value,
    args: Vec<Value>,
    locals: BTreeMap<String, Value>,
}

impl Frame {
    fn eval(&self, op: &Operand) -> Option<Value> {
        match op {
            Operand::This => Some(self.this.clone()),
            Operand::Param { index } => self.args.get(*index).cloned(),
            Operand::Local { name } => self.locals.get(name).cloned(),
            Operand::Lit { value } => Some(Value::from_literal(value)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::parse_facts;
    use crate::simcore::parse_scenario;

    #[test]
    fn literal_graph_without_calls() {
        let facts = parse_facts(
            r#"{
                "clusters": ["c1"],
                "classes": [{
                    "name": "Box", "cluster": "c1",
                    "fields": [{"name": "v", "type": {"kind": "primitive"}}],
                    "methods": []
                }]
            }"#,
        )
        .unwrap();
        let scenario = parse_scenario(
            r#"{"steps": [
                {"op": "new", "var": "b", "class": "Box"},
                {"op": "set", "path": "b.v", "value": 7},
                {"op": "assert", "path": "b.v", "value": 7}
            ]}"#,
            &facts,
        )
        .unwrap();
        let state = run_monolith(&facts, &scenario);
        assert!(state.assert_failures.is_empty());
        assert_eq!(state.contexts["main"].heap.len(), 1);
    }

    #[test]
    fn singleton_reconstruction_returns_same_instance() {
        let facts = parse_facts(
            r#"{
                "clusters": ["c1"],
                "classes": [{
                    "name": "Only", "cluster": "c1", "singleton": true,
                    "fields": [], "methods": []
                }]
            }"#,
        )
        .unwrap();
        let scenario = parse_scenario(
            r#"{"steps": [
                {"op": "new", "var": "a", "class": "Only"},
                {"op": "new", "var": "b", "class": "Only"}
            ]}"#,
            &facts,
        )
        .unwrap();
        let state = run_monolith(&facts, &scenario);
        assert_eq!(state.roots["a"], state.roots["b"]);
        assert_eq!(state.counters["instances.Only"], 1);
        assert_eq!(state.contexts["main"].heap.len(), 1);
    }
}
