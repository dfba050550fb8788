//! Transfer-safety classification of the cross-cluster API surface. Each API
//! is checked for constructs that JSON serialization cannot carry (static
//! state, library/resource members, singleton constructors, inbound
//! references); APIs free of all of them are safe to pass as JSON.

use crate::facts::{
    cross_cluster_edges, AccessMode, CodeFacts, Edge, TypeKind, TypeRef,
};
use crate::par;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ApiKind {
    Method,
    Constructor,
    FieldGet,
    FieldSet,
}

/// One cross-cluster dependency that must be exposed remotely.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ApiDescriptor {
    pub kind: ApiKind,
    pub owner_class: String,
    /// `Class.method/arity` or `Class.field`.
    pub member: String,
    pub server_cluster: String,
    pub client_clusters: BTreeSet<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caller_type: Option<TypeRef>,
    pub param_types: Vec<TypeRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub return_type: Option<TypeRef>,
}

/// Why an API needs ID-passing; `PassJson` means none of the reasons apply
/// and is mutually exclusive with the others.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TransferCategory {
    Static,
    Library,
    Singleton,
    Referenced,
    PassJson,
}

impl fmt::Display for TransferCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ApiClassification {
    pub api: ApiDescriptor,
    pub categories: BTreeSet<TransferCategory>,
    pub primary: TransferCategory,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassificationReport {
    pub apis: Vec<ApiClassification>,
    pub counts: BTreeMap<TransferCategory, u64>,
    pub total: u64,
}

impl ClassificationReport {
    /// Columns: `api,kind,categories,primary`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("api,kind,categories,primary\n");
        for entry in &self.apis {
            let categories: Vec<String> =
                entry.categories.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!(
                "{},{:?},{},{}\n",
                entry.api.member,
                entry.api.kind,
                categories.join("|"),
                entry.primary
            ));
        }
        out
    }
}

/// The post-clustering API surface: one descriptor per cross-cluster-called
/// method, per cross-cluster-instantiated class, and per cross-cluster field
/// access mode. Deduplicated and deterministically ordered.
pub fn api_surface(facts: &CodeFacts) -> Vec<ApiDescriptor> {
    let mut merged: BTreeMap<(String, ApiKind, String), ApiDescriptor> = BTreeMap::new();
    for cross in cross_cluster_edges(facts) {
        match &cross.edge {
            Edge::Call(call) => {
                let Some(decl) = facts.resolve_method(&call.to) else { continue };
                let kind = if decl.is_constructor { ApiKind::Constructor } else { ApiKind::Method };
                let caller_type = if decl.is_constructor {
                    None
                } else {
                    Some(TypeRef::declared(&call.to.class))
                };
                let return_type = if decl.is_constructor {
                    Some(TypeRef::declared(&call.to.class))
                } else {
                    decl.return_type.clone()
                };
                merged
                    .entry((call.to.class.clone(), kind, call.to.to_string()))
                    .or_insert_with(|| ApiDescriptor {
                        kind,
                        owner_class: call.to.class.clone(),
                        member: call.to.to_string(),
                        server_cluster: cross.to_cluster.clone(),
                        client_clusters: BTreeSet::new(),
                        caller_type,
                        param_types: decl.params.clone(),
                        return_type,
                    })
                    .client_clusters
                    .insert(cross.from_cluster.clone());
            }
            Edge::Access(access) => {
                let Some(decl) = facts.resolve_field(&access.field) else { continue };
                let kind = match access.mode {
                    AccessMode::Read => ApiKind::FieldGet,
                    AccessMode::Write => ApiKind::FieldSet,
                };
                let (param_types, return_type) = match access.mode {
                    AccessMode::Read => (vec![], Some(decl.ty.clone())),
                    AccessMode::Write => (vec![decl.ty.clone()], None),
                };
                merged
                    .entry((access.field.class.clone(), kind, access.field.to_string()))
                    .or_insert_with(|| ApiDescriptor {
                        kind,
                        owner_class: access.field.class.clone(),
                        member: access.field.to_string(),
                        server_cluster: cross.to_cluster.clone(),
                        client_clusters: BTreeSet::new(),
                        caller_type: Some(TypeRef::declared(&access.field.class)),
                        param_types,
                        return_type,
                    })
                    .client_clusters
                    .insert(cross.from_cluster.clone());
            }
        }
    }
    merged.into_values().collect()
}

/// Classes reachable from `class` via declared field types, including
/// `class` itself. Cycle-safe; taint does not continue through library
/// types (they are opaque).
fn reachable_classes<'a>(facts: &'a CodeFacts, class: &str) -> BTreeSet<&'a str> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let Some(start) = facts.class(class) else { return seen };
    let mut stack = vec![start.name.as_str()];
    while let Some(name) = stack.pop() {
        if !seen.insert(name) {
            continue;
        }
        if let Some(decl) = facts.class(name) {
            for field in &decl.fields {
                if field.ty.kind == TypeKind::Declared {
                    if let Some(target) = &field.ty.class_name {
                        if !seen.contains(target.as_str()) {
                            if let Some(t) = facts.class(target) {
                                stack.push(t.name.as_str());
                            }
                        }
                    }
                }
            }
        }
    }
    seen
}

/// True iff `t` is declared and its class, or any class reachable from it via
/// declared field types, declares at least one static field. Static-final
/// constants count: serialization omits them all the same.
pub fn static_taint(facts: &CodeFacts, t: &TypeRef) -> bool {
    let Some(class) = declared_class(t) else { return false };
    reachable_classes(facts, class).iter().any(|name| {
        facts
            .class(name)
            .map(|c| c.fields.iter().any(|f| f.is_static))
            .unwrap_or(false)
    })
}

/// True iff `t` is itself a library/resource type, or any reachable class
/// has a library- or resource-typed field.
pub fn library_taint(facts: &CodeFacts, t: &TypeRef) -> bool {
    if matches!(t.kind, TypeKind::Library | TypeKind::Resource) {
        return true;
    }
    let Some(class) = declared_class(t) else { return false };
    reachable_classes(facts, class).iter().any(|name| {
        facts
            .class(name)
            .map(|c| {
                c.fields
                    .iter()
                    .any(|f| matches!(f.ty.kind, TypeKind::Library | TypeKind::Resource))
            })
            .unwrap_or(false)
    })
}

/// True iff `t`'s class is a singleton or has a private constructor.
pub fn singleton_taint(facts: &CodeFacts, t: &TypeRef) -> bool {
    declared_class(t)
        .and_then(|name| facts.class(name))
        .map(|c| c.is_singleton || c.has_private_constructor)
        .unwrap_or(false)
}

/// True iff some class other than `t`'s declares a field whose type is `t`'s
/// class or any class reachable from it.
pub fn referenced_taint(facts: &CodeFacts, t: &TypeRef) -> bool {
    let Some(class) = declared_class(t) else { return false };
    let reachable = reachable_classes(facts, class);
    facts.classes.iter().any(|other| {
        other.name != class
            && other.fields.iter().any(|f| {
                f.ty.kind == TypeKind::Declared
                    && f.ty
                        .class_name
                        .as_deref()
                        .map(|n| reachable.contains(n))
                        .unwrap_or(false)
            })
    })
}

fn declared_class(t: &TypeRef) -> Option<&str> {
    if t.kind == TypeKind::Declared {
        t.class_name.as_deref()
    } else {
        None
    }
}

/// Evaluate the caller, parameter, and return types of `api` against all four
/// taints. An empty set means the API can pass JSON safely; the primary label
/// is the first match in the order Static > Library > Singleton > Referenced.
pub fn classify_api(
    facts: &CodeFacts,
    api: &ApiDescriptor,
) -> (BTreeSet<TransferCategory>, TransferCategory) {
    let types: Vec<&TypeRef> = api
        .caller_type
        .iter()
        .chain(api.param_types.iter())
        .chain(api.return_type.iter())
        .collect();
    let mut categories = BTreeSet::new();
    if types.iter().any(|t| static_taint(facts, t)) {
        categories.insert(TransferCategory::Static);
    }
    if types.iter().any(|t| library_taint(facts, t)) {
        categories.insert(TransferCategory::Library);
    }
    if types.iter().any(|t| singleton_taint(facts, t)) {
        categories.insert(TransferCategory::Singleton);
    }
    if types.iter().any(|t| referenced_taint(facts, t)) {
        categories.insert(TransferCategory::Referenced);
    }
    let primary = categories.iter().next().copied().unwrap_or(TransferCategory::PassJson);
    if categories.is_empty() {
        categories.insert(TransferCategory::PassJson);
    }
    (categories, primary)
}

/// Aggregate [`classify_api`] over the whole surface; counts are keyed by
/// primary label.
pub fn classification_report(facts: &CodeFacts) -> ClassificationReport {
    let surface = api_surface(facts);
    let apis: Vec<ApiClassification> = par::map(surface, |api| {
        let (categories, primary) = classify_api(facts, &api);
        ApiClassification { api, categories, primary }
    });
    let mut counts: BTreeMap<TransferCategory, u64> = BTreeMap::new();
    for entry in &apis {
        *counts.entry(entry.primary).or_default() += 1;
    }
    let total = apis.len() as u64;
    ClassificationReport { apis, counts, total }
}
