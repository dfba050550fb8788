//! The JSON-passing protocol engine. Remote calls serialize their arguments
//! as value trees; the callee works on deserialized copies and serializes
//! the (possibly mutated) copies back, and the caller rebinds only the
//! immediate call-site slots. Everything shared-heap semantics guarantees
//! beyond that — aliasing, cycles, `this` updates, outer references, static
//! state, constructor discipline — is detected eagerly and reported as a
//! finding.

use super::{
    aggregate_counters, resident_metrics, Finding, FindingCategory, ProtocolOutcome,
    ServiceMetrics,
};
use crate::facts::{Callee, CodeFacts, Effect, Operand, TypeKind, Visibility};
use crate::simcore::{
    construct_object, Arg, AssertFailure, CallTarget, ContextState, FinalState, Oid, Path,
    PlacedValue, ScenarioScript, Step, Value,
};
use std::collections::{BTreeMap, BTreeSet};

const MAX_CALL_DEPTH: usize = 32;

/// Execute `scenario` with one service per cluster and JSON-passing
/// semantics. The scenario driver runs in the client cluster; `new` always
/// allocates locally, and only class-target calls to classes homed
/// elsewhere cross the wire.
pub fn run_json_protocol(facts: &CodeFacts, scenario: &ScenarioScript) -> ProtocolOutcome {
    let client = scenario
        .client_cluster(facts)
        .unwrap_or_else(|| "main".to_string());
    let mut world = JsonWorld {
        facts,
        services: facts
            .clusters
            .iter()
            .map(|c| (c.clone(), ContextState::default()))
            .collect(),
        metrics: facts
            .clusters
            .iter()
            .map(|c| (c.clone(), ServiceMetrics::default()))
            .collect(),
        findings: Vec::new(),
        client: client.clone(),
        roots: BTreeMap::new(),
        failures: Vec::new(),
        step: 0,
    };
    world.services.entry(client.clone()).or_default();
    world.metrics.entry(client.clone()).or_default();

    for (index, step) in scenario.steps.iter().enumerate() {
        world.step = index;
        world.exec_step(index, step);
    }

    let JsonWorld { services, mut metrics, findings, roots, failures, .. } = world;
    resident_metrics(&services, &mut metrics);
    let counters = aggregate_counters(&services);
    // The comparison view of static state is the client's replica: writes
    // that happened on a server are exactly what JSON passing loses.
    let statics_view = services
        .get(&client)
        .map(|ctx| {
            ctx.statics
                .iter()
                .map(|(k, v)| {
                    (k.clone(), PlacedValue { context: client.clone(), value: v.clone() })
                })
                .collect()
        })
        .unwrap_or_default();
    let state = FinalState {
        roots: roots
            .into_iter()
            .map(|(k, v)| (k, PlacedValue { context: client.clone(), value: v }))
            .collect(),
        statics_view,
        counters,
        assert_failures: failures,
        gid_table: BTreeMap::new(),
        contexts: services,
    };
    ProtocolOutcome { state, metrics, findings }
}

/// A serialized message payload: what one value looks like on the wire.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Tree {
    Leaf(Value),
    Obj { class: String, fields: Vec<(String, Tree)> },
}

/// Payload size in units: one per object, plus one per field slot
/// (primitive leaf, null, or reference edge alike).
fn tree_units(tree: &Tree) -> u64 {
    match tree {
        Tree::Leaf(_) => 1,
        Tree::Obj { fields, .. } => {
            1 + fields
                .iter()
                .map(|(_, t)| match t {
                    Tree::Leaf(_) => 1,
                    obj => 1 + tree_units(obj),
                })
                .sum::<u64>()
        }
    }
}

struct JsonWorld<'a> {
    facts: &'a CodeFacts,
    services: BTreeMap<String, ContextState>,
    metrics: BTreeMap<String, ServiceMetrics>,
    findings: Vec<Finding>,
    client: String,
    roots: BTreeMap<String, Value>,
    failures: Vec<AssertFailure>,
    step: usize,
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

impl<'a> JsonWorld<'a> {
    fn err(&mut self, ctx: &str) {
        self.services.get_mut(ctx).expect("known service").runtime_error();
    }

    fn finding(&mut self, category: FindingCategory, detail: String) {
        let finding = Finding { category, step: self.step, detail };
        if !self.findings.contains(&finding) {
            self.findings.push(finding);
        }
    }

    // ---- serialization -------------------------------------------------

    /// Serialize a value held by `ctx`. `visited` is shared across one whole
    /// message, so an object reached twice anywhere in it is an alias loss.
    /// A reference cycle is unserializable and fails the message.
    fn serialize(
        &mut self,
        ctx: &str,
        value: &Value,
        visited: &mut BTreeSet<Oid>,
        on_path: &mut Vec<Oid>,
    ) -> Result<Tree, ()> {
        let oid = match value {
            Value::Ref(oid) => *oid,
            Value::Remote(_) => return Ok(Tree::Leaf(Value::Null)),
            prim => return Ok(Tree::Leaf(prim.clone())),
        };
        if on_path.contains(&oid) {
            let class = self.object_class(ctx, oid).unwrap_or_default();
            self.finding(
                FindingCategory::CycleError,
                format!("reference cycle through {class} cannot serialize"),
            );
            return Err(());
        }
        let Some(obj) = self.services.get(ctx).and_then(|c| c.heap.get(oid)) else {
            return Ok(Tree::Leaf(Value::Null));
        };
        let class = obj.class_name.clone();
        let field_values: Vec<(String, Value)> =
            obj.fields.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        if !visited.insert(oid) {
            self.finding(
                FindingCategory::AliasLoss,
                format!("{class} instance serialized more than once; copies diverge"),
            );
        }
        on_path.push(oid);
        let mut fields = Vec::with_capacity(field_values.len());
        for (name, field_value) in field_values {
            let decl = self.facts.class(&class).and_then(|c| c.field(&name));
            if let Some(decl) = decl {
                if decl.ty.kind == TypeKind::Resource {
                    self.finding(
                        FindingCategory::ResourceTransfer,
                        format!("resource field {class}.{name} nulled in transit"),
                    );
                    fields.push((name, Tree::Leaf(Value::Null)));
                    continue;
                }
                if decl.visibility == Visibility::Private {
                    self.finding(
                        FindingCategory::PrivateExposure,
                        format!("private field {class}.{name} crosses the wire"),
                    );
                }
            }
            let tree = self.serialize(ctx, &field_value, visited, on_path)?;
            fields.push((name, tree));
        }
        on_path.pop();
        Ok(Tree::Obj { class, fields })
    }

    /// Materialize a tree in `ctx` as fresh objects. This is reflective
    /// construction: it bypasses singleton discipline and re-runs observable
    /// constructor side effects, both of which are reported.
    fn deserialize(&mut self, ctx: &str, tree: &Tree) -> Option<Value> {
        match tree {
            Tree::Leaf(v) => Some(v.clone()),
            Tree::Obj { class, fields } => {
                if let Some(decl) = self.facts.class(class) {
                    if decl.is_singleton {
                        self.finding(
                            FindingCategory::SingletonViolation,
                            format!("deserialization created a second {class} instance"),
                        );
                    }
                    let delta = decl
                        .constructor()
                        .and_then(|m| m.constructor_model.as_ref())
                        .filter(|m| m.counter.is_some() && m.delta != 0);
                    if let Some(model) = delta {
                        self.finding(
                            FindingCategory::ConstructorSideEffect,
                            format!(
                                "reconstructing {class} re-fired counter {} by {}",
                                model.counter.as_deref().unwrap_or(""),
                                model.delta
                            ),
                        );
                    }
                }
                let oid = construct_object(
                    self.facts,
                    class,
                    self.services.get_mut(ctx)?,
                    false,
                )?;
                for (name, sub) in fields {
                    let value = self.deserialize(ctx, sub)?;
                    self.services
                        .get_mut(ctx)?
                        .heap
                        .get_mut(oid)?
                        .fields
                        .insert(name.clone(), value);
                }
                Some(Value::Ref(oid))
            }
        }
    }

    fn object_class(&self, ctx: &str, oid: Oid) -> Option<String> {
        Some(self.services.get(ctx)?.heap.get(oid)?.class_name.clone())
    }

    // ---- local heap access --------------------------------------------

    fn read_path(&self, path: &Path) -> Option<Value> {
        let ctx = self.services.get(&self.client)?;
        let mut value = self.roots.get(&path.root)?.clone();
        for field in &path.fields {
            let Value::Ref(oid) = value else { return None };
            value = ctx.heap.get(oid)?.fields.get(field)?.clone();
        }
        Some(value)
    }

    fn write_path(&mut self, path: &Path, value: Value) -> Option<()> {
        let (last, prefix) = path.fields.split_last()?;
        let mut cursor = self.roots.get(&path.root)?.clone();
        {
            let ctx = self.services.get(&self.client)?;
            for field in prefix {
                let Value::Ref(oid) = cursor else { return None };
                cursor = ctx.heap.get(oid)?.fields.get(field)?.clone();
            }
        }
        let Value::Ref(oid) = cursor else { return None };
        let obj = self.services.get_mut(&self.client)?.heap.get_mut(oid)?;
        if !obj.fields.contains_key(last) {
            return None;
        }
        obj.fields.insert(last.clone(), value);
        Some(())
    }

    /// Write through a dot path rooted at a frame value, within `ctx`.
    fn write_fields(&mut self, ctx: &str, base: Value, path: &str, value: Value) -> Option<()> {
        let mut segments: Vec<&str> = path.split('.').collect();
        let last = segments.pop()?;
        let mut cursor = base;
        {
            let state = self.services.get(ctx)?;
            for field in segments {
                let Value::Ref(oid) = cursor else { return None };
                cursor = state.heap.get(oid)?.fields.get(field)?.clone();
            }
        }
        let Value::Ref(oid) = cursor else { return None };
        let obj = self.services.get_mut(ctx)?.heap.get_mut(oid)?;
        if !obj.fields.contains_key(last) {
            return None;
        }
        obj.fields.insert(last.to_string(), value);
        Some(())
    }

    /// True iff `old` is still reachable from a scenario root or any heap
    /// field in `ctx`, excluding the root named in `skip_root`.
    fn still_referenced(&self, ctx: &str, old: Oid, skip_root: Option<&str>) -> bool {
        let root_hit = self.roots.iter().any(|(name, value)| {
            Some(name.as_str()) != skip_root && *value == Value::Ref(old)
        });
        if root_hit {
            return true;
        }
        self.services
            .get(ctx)
            .map(|state| {
                state
                    .heap
                    .iter()
                    .any(|obj| obj.fields.values().any(|v| *v == Value::Ref(old)))
            })
            .unwrap_or(false)
    }

    // ---- execution -----------------------------------------------------

    fn exec_step(&mut self, index: usize, step: &Step) {
        let client = self.client.clone();
        match step {
            Step::New { var, class } => {
                let constructed = self
                    .services
                    .get_mut(&client)
                    .and_then(|ctx| construct_object(self.facts, class, ctx, true));
                match constructed {
                    Some(oid) => {
                        self.roots.insert(var.clone(), Value::Ref(oid));
                    }
                    None => self.err(&client),
                }
            }
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
                match ScenarioScript::resolve_target(self.facts, target) {
                    CallTarget::Class(class) => {
                        let home = self.facts.cluster_of(&class).map(str::to_string);
                        let ret = match home {
                            Some(home) if home != client => {
                                let updates = self.remote_call(
                                    &client, &home, &class, method, arg_values, 0,
                                );
                                let Some((ret, arg_updates)) = updates else { return };
                                // Rebind the immediate call-site variables to
                                // the returned copies.
                                for (arg, update) in args.iter().zip(arg_updates) {
                                    let Some(tree) = update else { continue };
                                    if let Arg::Var { var } = arg {
                                        self.rebind_root(var.clone(), &tree);
                                    }
                                }
                                ret
                            }
                            _ => self.invoke_local(&client, &class, method, Value::Null, arg_values, 0),
                        };
                        if let (Some(var), Some(value)) = (capture, ret) {
                            self.roots.insert(var.clone(), value);
                        }
                    }
                    CallTarget::Var(var) => {
                        // Instances always live where they were created, so
                        // an instance call runs locally on that copy.
                        let Some(value) = self.roots.get(&var).cloned() else {
                            return self.err(&client);
                        };
                        let Value::Ref(oid) = value else { return self.err(&client) };
                        let Some(class) = self.object_class(&client, oid) else {
                            return self.err(&client);
                        };
                        let ret = self.invoke_local(&client, &class, method, value, arg_values, 0);
                        if let (Some(var), Some(value)) = (capture, ret) {
                            self.roots.insert(var.clone(), value);
                        }
                    }
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

    /// Rebind a scenario root to a deserialized copy, reporting the rebind
    /// as a loss if the stale original is still referenced elsewhere.
    fn rebind_root(&mut self, var: String, tree: &Tree) {
        let client = self.client.clone();
        let old = self.roots.get(&var).cloned();
        let Some(new_value) = self.deserialize(&client, tree) else { return };
        if let Some(Value::Ref(old_oid)) = old {
            if self.still_referenced(&client, old_oid, Some(&var)) {
                let class = self.object_class(&client, old_oid).unwrap_or_default();
                self.finding(
                    FindingCategory::ReferenceRebindLoss,
                    format!("{var} rebound to a copy; other references to the old {class} are stale"),
                );
            }
        }
        self.roots.insert(var, new_value);
    }

    /// One cross-service call: serialize args, run the method on copies at
    /// the callee, serialize the copies and return value back. Returns
    /// `None` when the message cannot be built (cycle), the caller-side
    /// return value, and per-arg updated trees (`Some` iff the callee
    /// mutated that argument's copy).
    #[allow(clippy::type_complexity)]
    fn remote_call(
        &mut self,
        caller: &str,
        callee: &str,
        class: &str,
        method: &str,
        args: Vec<Value>,
        depth: usize,
    ) -> Option<(Option<Value>, Vec<Option<Tree>>)> {
        let Some((_, decl)) = self.facts.lookup_method(class, method, args.len()) else {
            self.err(caller);
            return Some((None, args.iter().map(|_| None).collect()));
        };
        let decl = decl.clone();

        // Request: one shared visited set across all args of one message.
        let mut visited = BTreeSet::new();
        let mut out_trees = Vec::with_capacity(args.len());
        for arg in &args {
            let mut on_path = Vec::new();
            match self.serialize(caller, arg, &mut visited, &mut on_path) {
                Ok(tree) => out_trees.push(tree),
                Err(()) => return None, // call aborted, nothing rebound
            }
        }
        {
            let m = self.metrics.entry(caller.to_string()).or_default();
            m.api_calls += 1;
            m.sent_units += out_trees.iter().map(tree_units).sum::<u64>();
        }

        // Callee side: deserialize, execute, serialize back.
        let callee_args: Option<Vec<Value>> =
            out_trees.iter().map(|t| self.deserialize(callee, t)).collect();
        let Some(callee_args) = callee_args else {
            self.err(callee);
            return Some((None, args.iter().map(|_| None).collect()));
        };
        let arg_anchors = callee_args.clone();
        let ret = if decl.is_constructor {
            self.services
                .get_mut(callee)
                .and_then(|ctx| construct_object(self.facts, class, ctx, true))
                .map(Value::Ref)
        } else {
            self.invoke_local(callee, class, method, Value::Null, callee_args, depth)
        };

        // Response: the (possibly mutated) argument copies plus the return
        // value, serialized independently per slot.
        let mut response_units = 0u64;
        let mut arg_updates = Vec::with_capacity(arg_anchors.len());
        for (anchor, outbound) in arg_anchors.iter().zip(&out_trees) {
            let mut visited = BTreeSet::new();
            let mut on_path = Vec::new();
            let inbound = self.serialize(callee, anchor, &mut visited, &mut on_path).ok();
            match inbound {
                Some(tree) => {
                    response_units += tree_units(&tree);
                    arg_updates.push(if tree != *outbound { Some(tree) } else { None });
                }
                None => arg_updates.push(None),
            }
        }
        let ret_tree = match &ret {
            Some(value) => {
                let mut visited = BTreeSet::new();
                let mut on_path = Vec::new();
                match self.serialize(callee, value, &mut visited, &mut on_path) {
                    Ok(tree) => {
                        response_units += tree_units(&tree);
                        Some(tree)
                    }
                    Err(()) => None,
                }
            }
            None => None,
        };
        self.metrics.entry(callee.to_string()).or_default().sent_units += response_units;

        let ret = match ret_tree {
            Some(tree) => self.deserialize(caller, &tree),
            None => None,
        };
        Some((ret, arg_updates))
    }

    /// Run a method body on `ctx`'s own heap. Nested class-target calls to
    /// classes homed elsewhere go through [`Self::remote_call`]; instance
    /// calls always run on the local copy.
    fn invoke_local(
        &mut self,
        ctx: &str,
        class: &str,
        method: &str,
        this: Value,
        args: Vec<Value>,
        depth: usize,
    ) -> Option<Value> {
        if depth > MAX_CALL_DEPTH {
            self.err(ctx);
            return None;
        }
        let Some((_, decl)) = self.facts.lookup_method(class, method, args.len()) else {
            self.err(ctx);
            return None;
        };
        let decl = decl.clone();
        if decl.is_constructor {
            let oid = self
                .services
                .get_mut(ctx)
                .and_then(|c| construct_object(self.facts, class, c, true))?;
            return Some(Value::Ref(oid));
        }
        let mut frame = Frame { this, args, locals: BTreeMap::new() };
        let mut ret = None;
        for effect in &decl.effects {
            if self.apply_effect(ctx, effect, &mut frame, &mut ret, depth).is_none() {
                self.err(ctx);
            }
            if ret.is_some() {
                break;
            }
        }
        ret
    }

    fn apply_effect(
        &mut self,
        ctx: &str,
        effect: &Effect,
        frame: &mut Frame,
        ret: &mut Option<Value>,
        depth: usize,
    ) -> Option<()> {
        match effect {
            Effect::Construct { class, dest } => {
                let oid = self
                    .services
                    .get_mut(ctx)
                    .and_then(|c| construct_object(self.facts, class, c, true))?;
                frame.locals.insert(dest.clone(), Value::Ref(oid));
            }
            Effect::SetField { target, path, value } => {
                let base = frame.eval(target)?;
                let value = frame.eval(value)?;
                self.write_fields(ctx, base, path, value)?;
            }
            Effect::SetStatic { class, field, value } => {
                let value = frame.eval(value)?;
                if ctx != self.client {
                    self.finding(
                        FindingCategory::StaticLoss,
                        format!("static {class}.{field} written on {ctx}; client replica unchanged"),
                    );
                }
                self.services
                    .get_mut(ctx)?
                    .statics
                    .insert(format!("{class}.{field}"), value);
            }
            Effect::Call { receiver, method, args, dest } => {
                let arg_values: Option<Vec<Value>> = args.iter().map(|a| frame.eval(a)).collect();
                let arg_values = arg_values?;
                let result = match receiver {
                    Callee::Class { name } => {
                        let home = self.facts.cluster_of(name)?.to_string();
                        if home != ctx {
                            let outcome = self.remote_call(
                                ctx, &home, name, method, arg_values, depth + 1,
                            );
                            let Some((ret_value, arg_updates)) = outcome else {
                                // Cycle: the call never happened.
                                if let Some(dest) = dest {
                                    frame.locals.insert(dest.clone(), Value::Null);
                                }
                                return Some(());
                            };
                            self.rebind_frame_slots(ctx, frame, args, arg_updates);
                            ret_value
                        } else {
                            self.invoke_local(ctx, name, method, Value::Null, arg_values, depth + 1)
                        }
                    }
                    other => {
                        let this = match other {
                            Callee::This => frame.this.clone(),
                            Callee::Param { index } => frame.args.get(*index)?.clone(),
                            Callee::Local { name } => frame.locals.get(name)?.clone(),
                            Callee::Class { .. } => unreachable!(),
                        };
                        let Value::Ref(oid) = this else { return None };
                        let class = self.object_class(ctx, oid)?;
                        self.invoke_local(ctx, &class, method, Value::Ref(oid), arg_values, depth + 1)
                    }
                };
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

    /// After a nested remote call, rebind whichever call-site slots can be
    /// rebound. `this` has no slot: a mutated receiver copy is reported as
    /// [`FindingCategory::ThisNotUpdated`] and discarded.
    fn rebind_frame_slots(
        &mut self,
        ctx: &str,
        frame: &mut Frame,
        arg_operands: &[Operand],
        arg_updates: Vec<Option<Tree>>,
    ) {
        for (operand, update) in arg_operands.iter().zip(arg_updates) {
            let Some(tree) = update else { continue };
            match operand {
                Operand::This => {
                    self.finding(
                        FindingCategory::ThisNotUpdated,
                        "callee mutated its copy of `this`; the caller's object is unchanged"
                            .to_string(),
                    );
                }
                Operand::Param { index } => {
                    let old = frame.args.get(*index).cloned();
                    if let Some(new_value) = self.deserialize(ctx, &tree) {
                        if let Some(Value::Ref(old_oid)) = old {
                            if self.still_referenced(ctx, old_oid, None) {
                                let class =
                                    self.object_class(ctx, old_oid).unwrap_or_default();
                                self.finding(
                                    FindingCategory::ReferenceRebindLoss,
                                    format!(
                                        "parameter rebound to a copy; other references to the old {class} are stale"
                                    ),
                                );
                            }
                        }
                        if let Some(slot) = frame.args.get_mut(*index) {
                            *slot = new_value;
                        }
                    }
                }
                Operand::Local { name } => {
                    let old = frame.locals.get(name).cloned();
                    if let Some(new_value) = self.deserialize(ctx, &tree) {
                        if let Some(Value::Ref(old_oid)) = old {
                            if self.still_referenced(ctx, old_oid, None) {
                                let class =
                                    self.object_class(ctx, old_oid).unwrap_or_default();
                                self.finding(
                                    FindingCategory::ReferenceRebindLoss,
                                    format!(
                                        "local rebound to a copy; other references to the old {class} are stale"
                                    ),
                                );
                            }
                        }
                        frame.locals.insert(name.clone(), new_value);
                    }
                }
                Operand::Lit { .. } => {}
            }
        }
    }
}
