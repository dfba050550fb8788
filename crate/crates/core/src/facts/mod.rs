//! Code-facts data model: the whole analyzed program as classes, members,
//! edges, and a cluster assignment. All other modules consume a validated
//! [`CodeFacts`] value. `CodeFacts` is immutable after construction and safe
//! to share across concurrent readers.

mod parse;
mod validate;

pub use parse::{parse_facts, parse_facts_lenient, serialize_facts, ParseMode};
pub use validate::{validate, Violation, ViolationCode};

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Kind of a type appearing in a field or method signature.
///
/// `Library` and `Resource` are opaque leaves: no facts are recorded about
/// their internals and they never resolve to a declared class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeKind {
    Primitive,
    Declared,
    Library,
    Resource,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeRef {
    pub kind: TypeKind,
    /// Required iff `kind == Declared`.
    #[serde(rename = "class", default, skip_serializing_if = "Option::is_none")]
    pub class_name: Option<String>,
}

impl TypeRef {
    pub fn primitive() -> Self {
        TypeRef { kind: TypeKind::Primitive, class_name: None }
    }

    pub fn declared(class: impl Into<String>) -> Self {
        TypeRef { kind: TypeKind::Declared, class_name: Some(class.into()) }
    }

    pub fn library() -> Self {
        TypeRef { kind: TypeKind::Library, class_name: None }
    }

    pub fn resource() -> Self {
        TypeRef { kind: TypeKind::Resource, class_name: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    Private,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: TypeRef,
    #[serde(rename = "static", default)]
    pub is_static: bool,
    #[serde(default = "default_visibility")]
    pub visibility: Visibility,
}

fn default_visibility() -> Visibility {
    Visibility::Public
}

/// Opaque scenario literal. Numeric values are integers only; strings are
/// opaque.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Null,
    Bool(bool),
    Int(i64),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => write!(f, "null"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// Declarative model of a class's default constructor: field defaults plus an
/// observable side-effect counter.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstructorModel {
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub defaults: std::collections::BTreeMap<String, Literal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counter: Option<String>,
    #[serde(default)]
    pub delta: i64,
}

/// Operand of a method-body effect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operand {
    This,
    Param { index: usize },
    Local { name: String },
    Lit { value: Literal },
}

/// Receiver of a nested call effect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Callee {
    This,
    Param { index: usize },
    Local { name: String },
    Class { name: String },
}

/// One step of a declarative method body. The paper's communication-semantics
/// examples are all expressible as short effect lists; a full expression
/// language is unnecessary for verifying transfer semantics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    /// Construct a new instance of `class` and bind it to local `dest`.
    Construct { class: String, dest: String },
    /// Write `value` at dot-separated `path` starting from `target`.
    SetField { target: Operand, path: String, value: Operand },
    /// Write a static field of `class`.
    SetStatic { class: String, field: String, value: Operand },
    /// Invoke `method` on `receiver`, optionally binding the return value.
    Call {
        receiver: Callee,
        method: String,
        #[serde(default)]
        args: Vec<Operand>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dest: Option<String>,
    },
    /// Set the return value and stop executing effects.
    Return { value: Operand },
    /// Rebind parameter slot `index`; visible only inside the current frame,
    /// never in the caller.
    RebindParam { index: usize, value: Operand },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodDecl {
    pub name: String,
    #[serde(default)]
    pub params: Vec<TypeRef>,
    /// `None` means void.
    #[serde(rename = "return", default, skip_serializing_if = "Option::is_none")]
    pub return_type: Option<TypeRef>,
    #[serde(rename = "constructor", default)]
    pub is_constructor: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constructor_model: Option<ConstructorModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<Effect>,
}

impl MethodDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDecl {
    pub name: String,
    pub cluster: String,
    #[serde(rename = "singleton", default)]
    pub is_singleton: bool,
    #[serde(rename = "private_constructor", default)]
    pub has_private_constructor: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extends: Option<String>,
    #[serde(default)]
    pub fields: Vec<FieldDecl>,
    #[serde(default)]
    pub methods: Vec<MethodDecl>,
}

impl ClassDecl {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn method(&self, name: &str, arity: usize) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name && m.arity() == arity)
    }

    pub fn constructor(&self) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.is_constructor)
    }
}

/// Reference to a method as `Class.method/arity`. The arity suffix
/// disambiguates overloads without full signatures.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodRef {
    pub class: String,
    pub method: String,
    pub arity: usize,
}

impl MethodRef {
    pub fn new(class: impl Into<String>, method: impl Into<String>, arity: usize) -> Self {
        MethodRef { class: class.into(), method: method.into(), arity }
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}/{}", self.class, self.method, self.arity)
    }
}

impl FromStr for MethodRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (qual, arity) = s
            .rsplit_once('/')
            .ok_or_else(|| format!("method ref '{s}' missing '/arity' suffix"))?;
        let arity: usize =
            arity.parse().map_err(|_| format!("method ref '{s}' has non-numeric arity"))?;
        let (class, method) = qual
            .split_once('.')
            .ok_or_else(|| format!("method ref '{s}' missing 'Class.' qualifier"))?;
        if class.is_empty() || method.is_empty() {
            return Err(format!("method ref '{s}' has empty component"));
        }
        Ok(MethodRef { class: class.to_string(), method: method.to_string(), arity })
    }
}

/// Reference to a field as `Class.field`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldRef {
    pub class: String,
    pub field: String,
}

impl FieldRef {
    pub fn new(class: impl Into<String>, field: impl Into<String>) -> Self {
        FieldRef { class: class.into(), field: field.into() }
    }
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.field)
    }
}

impl FromStr for FieldRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (class, field) = s
            .split_once('.')
            .ok_or_else(|| format!("field ref '{s}' missing 'Class.' qualifier"))?;
        if class.is_empty() || field.is_empty() || field.contains('/') {
            return Err(format!("invalid field ref '{s}'"));
        }
        Ok(FieldRef { class: class.to_string(), field: field.to_string() })
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                raw.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(MethodRef);
string_serde!(FieldRef);

/// Aggregated call edge: one edge per caller/callee pair with an occurrence
/// count (default 1). Relocation needs reachability, not multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallEdge {
    pub from: MethodRef,
    pub to: MethodRef,
    #[serde(default = "one")]
    pub count: u64,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    Read,
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessEdge {
    pub from: MethodRef,
    pub field: FieldRef,
    pub mode: AccessMode,
}

/// The whole analyzed program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeFacts {
    pub clusters: BTreeSet<String>,
    pub classes: Vec<ClassDecl>,
    #[serde(default)]
    pub calls: Vec<CallEdge>,
    #[serde(default)]
    pub accesses: Vec<AccessEdge>,
}

impl CodeFacts {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn cluster_of(&self, class: &str) -> Option<&str> {
        self.class(class).map(|c| c.cluster.as_str())
    }

    pub fn resolve_method(&self, mref: &MethodRef) -> Option<&MethodDecl> {
        self.class(&mref.class)?.method(&mref.method, mref.arity)
    }

    pub fn resolve_field(&self, fref: &FieldRef) -> Option<&FieldDecl> {
        self.class(&fref.class)?.field(&fref.field)
    }

    /// Dynamic-dispatch lookup: walks the extends chain upward from `class`.
    pub fn lookup_method(&self, class: &str, name: &str, arity: usize) -> Option<(&ClassDecl, &MethodDecl)> {
        let mut cur = self.class(class);
        while let Some(c) = cur {
            if let Some(m) = c.method(name, arity) {
                return Some((c, m));
            }
            cur = c.extends.as_deref().and_then(|p| self.class(p));
        }
        None
    }

    /// Canonical in-memory order: classes by name, members by name/arity,
    /// edges lexicographic. Parsing normalizes through this, which makes the
    /// on-disk format order-insensitive.
    pub fn normalize(&mut self) {
        for c in &mut self.classes {
            c.fields.sort_by(|a, b| a.name.cmp(&b.name));
            c.methods.sort_by(|a, b| (&a.name, a.arity()).cmp(&(&b.name, b.arity())));
        }
        self.classes.sort_by(|a, b| a.name.cmp(&b.name));
        self.calls.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        self.accesses
            .sort_by(|a, b| (&a.from, &a.field, a.mode).cmp(&(&b.from, &b.field, b.mode)));
    }
}

/// Either kind of dependency edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "edge_kind", rename_all = "snake_case")]
pub enum Edge {
    Call(CallEdge),
    Access(AccessEdge),
}

impl Edge {
    pub fn from_ref(&self) -> &MethodRef {
        match self {
            Edge::Call(c) => &c.from,
            Edge::Access(a) => &a.from,
        }
    }

    pub fn to_string_key(&self) -> String {
        match self {
            Edge::Call(c) => c.to.to_string(),
            Edge::Access(a) => a.field.to_string(),
        }
    }
}

/// A dependency edge whose endpoints live in different clusters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossEdge {
    #[serde(flatten)]
    pub edge: Edge,
    pub from_cluster: String,
    pub to_cluster: String,
}

/// Exactly the call/access edges whose endpoint classes live in different
/// clusters, sorted by caller then callee.
pub fn cross_cluster_edges(facts: &CodeFacts) -> Vec<CrossEdge> {
    let mut out = Vec::new();
    for call in &facts.calls {
        let (Some(fc), Some(tc)) =
            (facts.cluster_of(&call.from.class), facts.cluster_of(&call.to.class))
        else {
            continue;
        };
        if fc != tc {
            out.push(CrossEdge {
                edge: Edge::Call(call.clone()),
                from_cluster: fc.to_string(),
                to_cluster: tc.to_string(),
            });
        }
    }
    for access in &facts.accesses {
        let (Some(fc), Some(tc)) =
            (facts.cluster_of(&access.from.class), facts.cluster_of(&access.field.class))
        else {
            continue;
        };
        if fc != tc {
            out.push(CrossEdge {
                edge: Edge::Access(access.clone()),
                from_cluster: fc.to_string(),
                to_cluster: tc.to_string(),
            });
        }
    }
    out.sort_by(|a, b| {
        (a.edge.from_ref().to_string(), a.edge.to_string_key())
            .cmp(&(b.edge.from_ref().to_string(), b.edge.to_string_key()))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_ref_parses_and_prints() {
        let r: MethodRef = "CatalogMgr.addItem/1".parse().unwrap();
        assert_eq!(r, MethodRef::new("CatalogMgr", "addItem", 1));
        assert_eq!(r.to_string(), "CatalogMgr.addItem/1");
    }

    #[test]
    fn method_ref_rejects_missing_arity() {
        assert!("CatalogMgr.addItem".parse::<MethodRef>().is_err());
        assert!("addItem/1".parse::<MethodRef>().is_err());
    }

    #[test]
    fn field_ref_rejects_method_shape() {
        assert!("TradeConfig.count".parse::<FieldRef>().is_ok());
        assert!("TradeConfig.count/0".parse::<FieldRef>().is_err());
    }
}
