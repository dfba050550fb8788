//! Object-heap model, scenario scripts, and the monolith reference
//! interpreter that defines ground-truth semantics.

mod fingerprint;
mod monolith;
mod scenario;

pub use fingerprint::heap_fingerprint;
pub use monolith::run_monolith;
pub use scenario::{parse_scenario, serialize_scenario, Arg, CallTarget, Path, ScenarioScript, Step};

use crate::facts::{ClassDecl, CodeFacts, Literal, TypeKind};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Local object id, unique within one heap.
pub type Oid = u64;

/// Globally unique object id: owning cluster plus a per-owner serial
/// assigned in creation order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Gid {
    pub owner: String,
    pub serial: u64,
}

impl fmt::Display for Gid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.owner, self.serial)
    }
}

/// A runtime value. `Ref` targets the same heap; `Remote` crosses service
/// boundaries through the owner's registry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Value {
    Int(i64),
    Str(String),
    Bool(bool),
    Null,
    Ref(Oid),
    Remote(Gid),
}

impl Value {
    pub fn from_literal(lit: &Literal) -> Value {
        match lit {
            Literal::Null => Value::Null,
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Int(i) => Value::Int(*i),
            Literal::Str(s) => Value::Str(s.clone()),
        }
    }

    pub fn matches_literal(&self, lit: &Literal) -> bool {
        match (self, lit) {
            (Value::Null, Literal::Null) => true,
            (Value::Bool(a), Literal::Bool(b)) => a == b,
            (Value::Int(a), Literal::Int(b)) => a == b,
            (Value::Str(a), Literal::Str(b)) => a == b,
            _ => false,
        }
    }

    pub fn is_object(&self) -> bool {
        matches!(self, Value::Ref(_) | Value::Remote(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeapObject {
    pub oid: Oid,
    pub class_name: String,
    /// Instance fields only; static fields live in the context's static
    /// store.
    pub fields: BTreeMap<String, Value>,
    /// Assigned by the ID engine at creation; absent elsewhere.
    pub gid: Option<Gid>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Heap {
    objects: BTreeMap<Oid, HeapObject>,
    next: Oid,
}

impl Heap {
    pub fn alloc(&mut self, class_name: &str) -> Oid {
        let oid = self.next;
        self.next += 1;
        self.objects.insert(
            oid,
            HeapObject {
                oid,
                class_name: class_name.to_string(),
                fields: BTreeMap::new(),
                gid: None,
            },
        );
        oid
    }

    pub fn get(&self, oid: Oid) -> Option<&HeapObject> {
        self.objects.get(&oid)
    }

    pub fn get_mut(&mut self, oid: Oid) -> Option<&mut HeapObject> {
        self.objects.get_mut(&oid)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &HeapObject> {
        self.objects.values()
    }
}

/// Mutable state of one execution context (the monolith, or one service).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ContextState {
    pub heap: Heap,
    /// `Class.field` -> value.
    pub statics: BTreeMap<String, Value>,
    pub counters: BTreeMap<String, i64>,
    /// Singleton class -> its unique instance.
    pub singletons: BTreeMap<String, Oid>,
}

pub const RUNTIME_ERRORS: &str = "runtime_errors";

impl ContextState {
    pub fn runtime_error(&mut self) {
        *self.counters.entry(RUNTIME_ERRORS.to_string()).or_default() += 1;
    }
}

/// Allocate and default-initialize an instance of `class_name`.
///
/// With `honor_singleton` (monolith and ID semantics) a second construction
/// of a singleton class returns the existing instance and fires no side
/// effects. JSON deserialization passes `false`, bypassing the check exactly
/// the way reflective construction does.
pub fn construct_object(
    facts: &CodeFacts,
    class_name: &str,
    ctx: &mut ContextState,
    honor_singleton: bool,
) -> Option<Oid> {
    let class = facts.class(class_name)?;
    if honor_singleton && class.is_singleton {
        if let Some(&existing) = ctx.singletons.get(class_name) {
            return Some(existing);
        }
    }
    let oid = ctx.heap.alloc(class_name);
    let mut fields = BTreeMap::new();
    for field in instance_fields(class) {
        let default = match field.ty.kind {
            TypeKind::Primitive => Value::Int(0),
            _ => Value::Null,
        };
        fields.insert(field.name.clone(), default);
    }
    if let Some(model) = class.constructor().and_then(|m| m.constructor_model.as_ref()) {
        for (name, lit) in &model.defaults {
            if fields.contains_key(name) {
                fields.insert(name.clone(), Value::from_literal(lit));
            }
        }
        if let Some(counter) = &model.counter {
            *ctx.counters.entry(counter.clone()).or_default() += model.delta;
        }
    }
    ctx.heap.get_mut(oid).expect("fresh object").fields = fields;
    if class.is_singleton {
        *ctx.counters.entry(format!("instances.{class_name}")).or_default() += 1;
        ctx.singletons.insert(class_name.to_string(), oid);
    }
    Some(oid)
}

pub fn instance_fields(class: &ClassDecl) -> impl Iterator<Item = &crate::facts::FieldDecl> {
    class.fields.iter().filter(|f| !f.is_static)
}

/// A value tagged with the context whose heap its refs resolve in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlacedValue {
    pub context: String,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssertFailure {
    pub step: usize,
    pub path: String,
    pub expected: Literal,
    pub actual: String,
}

/// The result of running a scenario under any engine: per-context state plus
/// the engine's comparison view (resolved roots, merged statics, aggregated
/// counters).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FinalState {
    pub contexts: BTreeMap<String, ContextState>,
    pub roots: BTreeMap<String, PlacedValue>,
    /// `Class.field` -> value as observed for comparison against the
    /// monolith's global store.
    pub statics_view: BTreeMap<String, PlacedValue>,
    pub counters: BTreeMap<String, i64>,
    pub assert_failures: Vec<AssertFailure>,
    /// Gid display string -> (context, oid); used to chase `Remote` values
    /// during fingerprinting.
    pub gid_table: BTreeMap<String, (String, Oid)>,
}

impl Default for Value {
    fn default() -> Self {
        Value::Null
    }
}
