//! Wrapper-based refactoring plan: client stubs, server wrappers, endpoint
//! routes, id-map ownership, class renames, and the override dispatch table.
//! The plan is a declarative document carrying every decision a code emitter
//! would need; it is not generated source.

use crate::classify::{api_surface, ApiDescriptor, ApiKind};
use crate::facts::{CodeFacts, FieldRef, MethodRef, TypeKind, TypeRef};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Wire representation of one request/response field. Every declared type
/// crosses the wire as a Gid; primitives pass through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WireType {
    Gid,
    Primitive,
}

fn wire_of(ty: &TypeRef) -> WireType {
    match ty.kind {
        TypeKind::Primitive => WireType::Primitive,
        _ => WireType::Gid,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EndpointSpec {
    pub route: String,
    pub api: ApiDescriptor,
    pub request_fields: Vec<(String, WireType)>,
    pub response_fields: Vec<(String, WireType)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WrapperSide {
    Client,
    Server,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WrapperHolds {
    IdField,
    IdToObjectMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WrapperSpec {
    pub side: WrapperSide,
    pub wrapper_class_name: String,
    pub wrapped_class_name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub renamed_original: Option<String>,
    pub holds: WrapperHolds,
    pub endpoints: Vec<EndpointSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefactoringPlan {
    /// Per-cluster wrapper specs, servers before clients within a cluster.
    pub wrappers: BTreeMap<String, Vec<WrapperSpec>>,
    /// Base `Class.method/arity` -> list of (subclass, route) including the
    /// base class itself.
    pub dispatch_table: BTreeMap<String, Vec<(String, String)>>,
    /// Name-uniquification notes.
    pub warnings: Vec<String>,
}

impl RefactoringPlan {
    pub fn server_endpoint_count(&self) -> usize {
        self.wrappers
            .values()
            .flatten()
            .filter(|w| w.side == WrapperSide::Server)
            .map(|w| w.endpoints.len())
            .sum()
    }
}

fn route_member(api: &ApiDescriptor) -> String {
    match api.kind {
        ApiKind::Constructor => "create".to_string(),
        ApiKind::Method => {
            let mref: MethodRef = api.member.parse().expect("method member ref");
            mref.method
        }
        ApiKind::FieldGet => {
            let fref: FieldRef = api.member.parse().expect("field member ref");
            format!("get_{}", fref.field)
        }
        ApiKind::FieldSet => {
            let fref: FieldRef = api.member.parse().expect("field member ref");
            format!("set_{}", fref.field)
        }
    }
}

/// Routes are lowercase `/class/member`; an `_N` arity suffix is added when
/// overloads collide on the same route.
fn assign_routes(surface: &[ApiDescriptor]) -> BTreeMap<String, String> {
    let mut base_count: BTreeMap<(String, String), usize> = BTreeMap::new();
    for api in surface {
        *base_count
            .entry((api.owner_class.clone(), route_member(api)))
            .or_default() += 1;
    }
    let mut routes = BTreeMap::new();
    for api in surface {
        let member = route_member(api);
        let collides = base_count[&(api.owner_class.clone(), member.clone())] > 1;
        let member = if collides && api.kind == ApiKind::Method {
            let mref: MethodRef = api.member.parse().expect("method member ref");
            format!("{member}_{}", mref.arity)
        } else {
            member
        };
        routes.insert(
            api.member.clone(),
            format!("/{}/{}", api.owner_class.to_lowercase(), member),
        );
    }
    routes
}

fn endpoint_for(api: &ApiDescriptor, route: String) -> EndpointSpec {
    let mut request_fields = Vec::new();
    let mut response_fields = Vec::new();
    match api.kind {
        ApiKind::Constructor => {
            for (i, p) in api.param_types.iter().enumerate() {
                request_fields.push((format!("p{i}"), wire_of(p)));
            }
            response_fields.push(("id".to_string(), WireType::Gid));
        }
        ApiKind::Method => {
            request_fields.push(("caller".to_string(), WireType::Gid));
            for (i, p) in api.param_types.iter().enumerate() {
                request_fields.push((format!("p{i}"), wire_of(p)));
            }
            if let Some(ret) = &api.return_type {
                response_fields.push(("return".to_string(), wire_of(ret)));
            }
        }
        ApiKind::FieldGet => {
            request_fields.push(("caller".to_string(), WireType::Gid));
            if let Some(ret) = &api.return_type {
                response_fields.push(("value".to_string(), wire_of(ret)));
            }
        }
        ApiKind::FieldSet => {
            request_fields.push(("caller".to_string(), WireType::Gid));
            if let Some(val) = api.param_types.first() {
                request_fields.push(("value".to_string(), wire_of(val)));
            }
        }
    }
    EndpointSpec { route, api: api.clone(), request_fields, response_fields }
}

fn uniquify(name: String, taken: &mut BTreeSet<String>, warnings: &mut Vec<String>) -> String {
    let mut candidate = name.clone();
    while taken.contains(&candidate) {
        candidate.push_str("_x");
    }
    if candidate != name {
        warnings.push(format!("renamed generated class {name} to {candidate} to avoid a collision"));
    }
    taken.insert(candidate.clone());
    candidate
}

/// Generate the full wrapper plan for the current API surface. Every exposed
/// class gets one server wrapper holding the id-to-object map (the original
/// class is renamed `<Class>Server`) and, per consuming cluster, one client
/// wrapper with the original class name holding an id field.
pub fn generate_plan(facts: &CodeFacts) -> RefactoringPlan {
    let surface = api_surface(facts);
    let routes = assign_routes(&surface);
    let mut warnings = Vec::new();
    let mut existing: BTreeSet<String> = facts.classes.iter().map(|c| c.name.clone()).collect();

    // (server_cluster, class) -> endpoints, with client clusters merged.
    let mut by_class: BTreeMap<(String, String), (Vec<EndpointSpec>, BTreeSet<String>)> =
        BTreeMap::new();
    for api in &surface {
        let entry = by_class
            .entry((api.server_cluster.clone(), api.owner_class.clone()))
            .or_default();
        entry.0.push(endpoint_for(api, routes[&api.member].clone()));
        entry.1.extend(api.client_clusters.iter().cloned());
    }

    let mut wrappers: BTreeMap<String, Vec<WrapperSpec>> = BTreeMap::new();
    for ((server_cluster, class), (endpoints, client_clusters)) in by_class {
        let wrapper_name =
            uniquify(format!("{class}Wrapper"), &mut existing, &mut warnings);
        let renamed = uniquify(format!("{class}Server"), &mut existing, &mut warnings);
        wrappers.entry(server_cluster).or_default().push(WrapperSpec {
            side: WrapperSide::Server,
            wrapper_class_name: wrapper_name,
            wrapped_class_name: class.clone(),
            renamed_original: Some(renamed),
            holds: WrapperHolds::IdToObjectMap,
            endpoints: endpoints.clone(),
        });
        for client in client_clusters {
            // The client stub deliberately reuses the original class name so
            // call sites stay untouched; it lives in a different cluster.
            wrappers.entry(client).or_default().push(WrapperSpec {
                side: WrapperSide::Client,
                wrapper_class_name: class.clone(),
                wrapped_class_name: class.clone(),
                renamed_original: None,
                holds: WrapperHolds::IdField,
                endpoints: endpoints.clone(),
            });
        }
    }
    for specs in wrappers.values_mut() {
        specs.sort_by_key(|w| {
            (matches!(w.side, WrapperSide::Client), w.wrapped_class_name.clone())
        });
    }

    RefactoringPlan { wrappers, dispatch_table: dispatch_table(facts), warnings }
}

/// For every exposed method overridden in a cross-cluster-reachable subclass:
/// map the base method to each (subclass, route) pair, base class included.
/// Which route a call site needs cannot be decided statically; the wrappers
/// resolve it at run time.
pub fn dispatch_table(facts: &CodeFacts) -> BTreeMap<String, Vec<(String, String)>> {
    let surface = api_surface(facts);
    let routes = assign_routes(&surface);
    let reachable_classes: BTreeSet<&str> =
        surface.iter().map(|a| a.owner_class.as_str()).collect();
    let mut table: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for api in &surface {
        if api.kind != ApiKind::Method {
            continue;
        }
        let base: MethodRef = api.member.parse().expect("method member ref");
        let mut entries = Vec::new();
        for sub in &facts.classes {
            if sub.name == base.class || !extends_transitively(facts, &sub.name, &base.class) {
                continue;
            }
            if sub.method(&base.method, base.arity).is_none() {
                continue;
            }
            let sub_reachable = reachable_classes.contains(sub.name.as_str())
                || crate::facts::cross_cluster_edges(facts)
                    .iter()
                    .any(|e| e.edge.to_string_key().starts_with(&format!("{}.", sub.name)));
            if !sub_reachable {
                continue;
            }
            let sub_member = MethodRef::new(&sub.name, &base.method, base.arity).to_string();
            let route = routes.get(&sub_member).cloned().unwrap_or_else(|| {
                format!("/{}/{}", sub.name.to_lowercase(), base.method)
            });
            entries.push((sub.name.clone(), route));
        }
        if !entries.is_empty() {
            entries.insert(0, (base.class.clone(), routes[&api.member].clone()));
            entries.sort();
            table.insert(api.member.clone(), entries);
        }
    }
    table
}

fn extends_transitively(facts: &CodeFacts, sub: &str, base: &str) -> bool {
    let mut cur = facts.class(sub).and_then(|c| c.extends.as_deref());
    while let Some(parent) = cur {
        if parent == base {
            return true;
        }
        cur = facts.class(parent).and_then(|c| c.extends.as_deref());
    }
    false
}

/// Anti-pattern warnings: static sharing, accessor explosion, resource-typed
/// parameters. Simple getters/setters exposed as APIs increase interactions,
/// so their count is always reported.
pub fn lint(facts: &CodeFacts, plan: &RefactoringPlan) -> Vec<String> {
    let mut out = Vec::new();
    let accessor_count: usize = plan
        .wrappers
        .values()
        .flatten()
        .filter(|w| w.side == WrapperSide::Server)
        .flat_map(|w| &w.endpoints)
        .filter(|e| matches!(e.api.kind, ApiKind::FieldGet | ApiKind::FieldSet))
        .count();
    if accessor_count > 0 {
        out.push(format!("accessor endpoints: {accessor_count}"));
    }
    for wrapper in plan.wrappers.values().flatten() {
        if wrapper.side != WrapperSide::Server {
            continue;
        }
        if let Some(class) = facts.class(&wrapper.wrapped_class_name) {
            if class.fields.iter().any(|f| f.is_static) {
                out.push(format!(
                    "static sharing: exposed class {} has static fields",
                    class.name
                ));
            }
        }
        for endpoint in &wrapper.endpoints {
            for (i, p) in endpoint.api.param_types.iter().enumerate() {
                if p.kind == TypeKind::Resource {
                    out.push(format!(
                        "resource-typed parameter {i} on {}",
                        endpoint.api.member
                    ));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}
