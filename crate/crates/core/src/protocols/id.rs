//! The ID-passing protocol engine. Every object lives in exactly one
//! service (the home cluster of its class) and is addressed everywhere else
//! by a global id. Calls are dispatched to the owner; only ids and
//! primitives ever cross the wire. By construction this engine produces no
//! loss findings.

use super::{aggregate_counters, resident_metrics, ProtocolOutcome, ServiceMetrics};
use crate::facts::{Callee, CodeFacts, Effect, Operand};
use crate::simcore::{
    construct_object, Arg, AssertFailure, CallTarget, ContextState, FinalState, Gid, Oid, Path,
    PlacedValue, ScenarioScript, Step, Value,
};
use std::collections::BTreeMap;

const MAX_CALL_DEPTH: usize = 32;

/// Execute `scenario` with one service per cluster, ID-passing semantics,
/// and the scenario driver running in the scenario's client cluster.
pub fn run_id_protocol(facts: &CodeFacts, scenario: &ScenarioScript) -> ProtocolOutcome {
    let client = scenario
        .client_cluster(facts)
        .unwrap_or_else(|| "main".to_string());
    let mut world = IdWorld {
        facts,
        services: facts
            .clusters
            .iter()
            .map(|c| (c.clone(), ContextState::default()))
            .collect(),
        registry: BTreeMap::new(),
        serials: BTreeMap::new(),
        metrics: facts
            .clusters
            .iter()
            .map(|c| (c.clone(), ServiceMetrics::default()))
            .collect(),
        client: client.clone(),
        roots: BTreeMap::new(),
        failures: Vec::new(),
    };
    world.services.entry(client.clone()).or_default();
    world.metrics.entry(client.clone()).or_default();

    for (index, step) in scenario.steps.iter().enumerate() {
        world.step(index, step);
    }

    let IdWorld { services, registry, mut metrics, roots, failures, .. } = world;
    resident_metrics(&services, &mut metrics);
    let counters = aggregate_counters(&services);
    let mut statics_view = BTreeMap::new();
    for (name, ctx) in &services {
        for (key, value) in &ctx.statics {
            statics_view.insert(
                key.clone(),
                PlacedValue { context: name.clone(), value: value.clone() },
            );
        }
    }
    let state = FinalState {
        roots: roots
            .into_iter()
            .map(|(k, v)| (k, PlacedValue { context: client.clone(), value: v }))
            .collect(),
        statics_view,
        counters,
        assert_failures: failures,
        gid_table: registry,
        contexts: services,
    };
    ProtocolOutcome { state, metrics, findings: Vec::new() }
}

struct IdWorld<'a> {
    facts: &'a CodeFacts,
    services: BTreeMap<String, ContextState>,
    /// Gid display string -> (owning service, local oid).
    registry: BTreeMap<String, (String, Oid)>,
    serials: BTreeMap<String, u64>,
    metrics: BTreeMap<String, ServiceMetrics>,
    client: String,
    roots: BTreeMap<String, Value>,
    failures: Vec<AssertFailure>,
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

impl<'a> IdWorld<'a> {
    fn err(&mut self, ctx: &str) {
        self.services.get_mut(ctx).expect("known service").runtime_error();
    }

    /// Construct an instance at its class's home service and return the home
    /// and local oid. Charges a remote-create round trip when `from` is a
    /// different service.
    fn create(&mut self, from: &str, class: &str) -> Option<(String, Oid)> {
        let home = self.facts.cluster_of(class)?.to_string();
        let ctx = self.services.get_mut(&home)?;
        let oid = construct_object(self.facts, class, ctx, true)?;
        if ctx.heap.get(oid)?.gid.is_none() {
            let serial = self.serials.entry(home.clone()).or_default();
            *serial += 1;
            let gid = Gid { owner: home.clone(), serial: *serial };
            self.registry.insert(gid.to_string(), (home.clone(), oid));
            self.services.get_mut(&home)?.heap.get_mut(oid)?.gid = Some(gid);
        }
        if home != from {
            let m = self.metrics.entry(from.to_string()).or_default();
            m.api_calls += 1;
            // Response carries the fresh (or singleton's existing) id.
            self.metrics.entry(home.clone()).or_default().sent_units += 1;
        }
        Some((home, oid))
    }

    /// Re-express `value` (valid in service `from`) for service `to`.
    fn localize(&self, from: &str, to: &str, value: Value) -> Value {
        if from == to {
            return value;
        }
        match value {
            Value::Ref(oid) => {
                let gid = self
                    .services
                    .get(from)
                    .and_then(|c| c.heap.get(oid))
                    .and_then(|o| o.gid.clone());
                match gid {
                    Some(gid) => Value::Remote(gid),
                    None => Value::Null,
                }
            }
            Value::Remote(gid) if gid.owner == to => {
                match self.registry.get(&gid.to_string()) {
                    Some((_, oid)) => Value::Ref(*oid),
                    None => Value::Remote(gid),
                }
            }
            other => other,
        }
    }

    /// (owning service, oid) of an object value held by `ctx`.
    fn locate(&self, ctx: &str, value: &Value) -> Option<(String, Oid)> {
        match value {
            Value::Ref(oid) => Some((ctx.to_string(), *oid)),
            Value::Remote(gid) => self.registry.get(&gid.to_string()).cloned(),
            _ => None,
        }
    }

    fn class_of(&self, ctx: &str, value: &Value) -> Option<String> {
        let (owner, oid) = self.locate(ctx, value)?;
        Some(self.services.get(&owner)?.heap.get(oid)?.class_name.clone())
    }

    /// Read one field of an object value held by `reader`, charging an
    /// accessor round trip when the object lives elsewhere.
    fn read_field(&mut self, reader: &str, value: &Value, field: &str) -> Option<Value> {
        let (owner, oid) = self.locate(reader, value)?;
        let raw = self.services.get(&owner)?.heap.get(oid)?.fields.get(field)?.clone();
        if owner != reader {
            let m = self.metrics.entry(reader.to_string()).or_default();
            m.api_calls += 1;
            m.sent_units += 1; // request: the target object's id
            self.metrics.entry(owner.clone()).or_default().sent_units += 1; // response value
        }
        Some(self.localize(&owner, reader, raw))
    }

    /// Write one field of an object value held by `writer`.
    fn write_field(&mut self, writer: &str, target: &Value, field: &str, value: Value) -> Option<()> {
        let (owner, oid) = self.locate(writer, target)?;
        if owner != writer {
            let m = self.metrics.entry(writer.to_string()).or_default();
            m.api_calls += 1;
            m.sent_units += 2; // request: target id + value
        }
        let value = self.localize(writer, &owner, value);
        let obj = self.services.get_mut(&owner)?.heap.get_mut(oid)?;
        if !obj.fields.contains_key(field) {
            return None;
        }
        obj.fields.insert(field.to_string(), value);
        Some(())
    }

    /// Follow a dot path from a client-perspective value.
    fn read_chain(&mut self, reader: &str, start: Value, fields: &[String]) -> Option<Value> {
        let mut value = start;
        for field in fields {
            value = self.read_field(reader, &value.clone(), field)?;
        }
        Some(value)
    }

    fn read_path(&mut self, path: &Path) -> Option<Value> {
        let start = self.roots.get(&path.root)?.clone();
        let client = self.client.clone();
        self.read_chain(&client, start, &path.fields)
    }

    fn write_path(&mut self, path: &Path, value: Value) -> Option<()> {
        let (last, prefix) = path.fields.split_last()?;
        let start = self.roots.get(&path.root)?.clone();
        let client = self.client.clone();
        let holder = self.read_chain(&client, start, prefix)?;
        self.write_field(&client, &holder, last, value)
    }

    fn step(&mut self, index: usize, step: &Step) {
        let client = self.client.clone();
        match step {
            Step::New { var, class } => match self.create(&client, class) {
                Some((home, oid)) => {
                    let value = self.localize(&home, &client, Value::Ref(oid));
                    self.roots.insert(var.clone(), value);
                }
                None => self.err(&client),
            },
            Step::Set { path, value } => {
                if self.write_path(path, Value::from_literal(value)).is_none() {
                    self.err(&client);
                }
            }
            Step::Setref { path, source } => match self.read_path(source) {
                Some(value) => {
                    if self.write_path(path, value).is_none() {
                        self.err(&client);
                    }
                }
                None => self.err(&client),
            },
            Step::Alias { var, path } => match self.read_path(path) {
                Some(value) => {
                    self.roots.insert(var.clone(), value);
                }
                None => self.err(&client),
            },
            Step::Call { target, method, args, capture } => {
                let (this, class) = match ScenarioScript::resolve_target(self.facts, target) {
                    CallTarget::Class(class) => (Value::Null, class),
                    CallTarget::Var(var) => {
                        let Some(value) = self.roots.get(&var).cloned() else {
                            return self.err(&client);
                        };
                        let Some(class) = self.class_of(&client, &value) else {
                            return self.err(&client);
                        };
                        (value, class)
                    }
                };
                let arg_values: Option<Vec<Value>> = args
                    .iter()
                    .map(|a| match a {
                        Arg::Var { var } => self.roots.get(var).cloned(),
                        Arg::Lit { lit } => Some(Value::from_literal(lit)),
                    })
                    .collect();
                let Some(arg_values) = arg_values else {
                    return self.err(&client);
                };
                let ret = self.invoke(&client, &class, method, this, arg_values, 0);
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

    /// Dispatch `method` of `class` at the class's home service. Receiver
    /// and args are caller-perspective and get converted at the boundary;
    /// the return value is converted back. Remote calls charge the wire:
    /// one id per instance receiver and per argument, one unit back per
    /// returned value.
    fn invoke(
        &mut self,
        caller: &str,
        class: &str,
        method: &str,
        this: Value,
        args: Vec<Value>,
        depth: usize,
    ) -> Option<Value> {
        if depth > MAX_CALL_DEPTH {
            self.err(caller);
            return None;
        }
        let Some(exec) = self.facts.cluster_of(class).map(str::to_string) else {
            self.err(caller);
            return None;
        };
        let Some((_, decl)) = self.facts.lookup_method(class, method, args.len()) else {
            self.err(caller);
            return None;
        };
        let decl = decl.clone();
        let remote = exec != caller;
        if remote {
            let m = self.metrics.entry(caller.to_string()).or_default();
            m.api_calls += 1;
            m.sent_units += u64::from(this.is_object()) + args.len() as u64;
        }
        if decl.is_constructor {
            let (home, oid) = self.create(&exec, class)?;
            let local = self.localize(&home, &exec, Value::Ref(oid));
            let back = self.localize(&exec, caller, local);
            if remote {
                self.metrics.entry(exec).or_default().sent_units += 1;
            }
            return Some(back);
        }
        let this = self.localize(caller, &exec, this);
        let args: Vec<Value> =
            args.into_iter().map(|a| self.localize(caller, &exec, a)).collect();
        let mut frame = Frame { this, args, locals: BTreeMap::new() };
        let mut ret = None;
        for effect in &decl.effects {
            if self.apply_effect(&exec, effect, &mut frame, &mut ret, depth).is_none() {
                self.err(&exec);
            }
            if ret.is_some() {
                break;
            }
        }
        let ret = ret.map(|v| self.localize(&exec, caller, v));
        if remote && ret.is_some() {
            self.metrics.entry(exec).or_default().sent_units += 1;
        }
        ret
    }

    fn apply_effect(
        &mut self,
        exec: &str,
        effect: &Effect,
        frame: &mut Frame,
        ret: &mut Option<Value>,
        depth: usize,
    ) -> Option<()> {
        match effect {
            Effect::Construct { class, dest } => {
                let (home, oid) = self.create(exec, class)?;
                let value = self.localize(&home, exec, Value::Ref(oid));
                frame.locals.insert(dest.clone(), value);
            }
            Effect::SetField { target, path, value } => {
                let base = frame.eval(target)?;
                let value = frame.eval(value)?;
                let mut segments: Vec<&str> = path.split('.').collect();
                let last = segments.pop()?;
                let mut holder = base;
                for field in segments {
                    holder = self.read_field(exec, &holder.clone(), field)?;
                }
                self.write_field(exec, &holder, last, value)?;
            }
            Effect::SetStatic { class, field, value } => {
                let value = frame.eval(value)?;
                let home = self.facts.cluster_of(class)?.to_string();
                if home != *exec {
                    let m = self.metrics.entry(exec.to_string()).or_default();
                    m.api_calls += 1;
                    m.sent_units += 1; // request: the value to store
                }
                let value = self.localize(exec, &home, value);
                self.services
                    .get_mut(&home)?
                    .statics
                    .insert(format!("{class}.{field}"), value);
            }
            Effect::Call { receiver, method, args, dest } => {
                let (this, class) = match receiver {
                    Callee::Class { name } => (Value::Null, name.clone()),
                    Callee::This => {
                        let v = frame.this.clone();
                        (v.clone(), self.class_of(exec, &v)?)
                    }
                    Callee::Param { index } => {
                        let v = frame.args.get(*index)?.clone();
                        (v.clone(), self.class_of(exec, &v)?)
                    }
                    Callee::Local { name } => {
                        let v = frame.locals.get(name)?.clone();
                        (v.clone(), self.class_of(exec, &v)?)
                    }
                };
                let arg_values: Option<Vec<Value>> = args.iter().map(|a| frame.eval(a)).collect();
                let result = self.invoke(exec, &class, method, this, arg_values?, depth + 1);
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
}
