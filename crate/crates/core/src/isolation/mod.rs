//! Function isolation: build per-class method-field graphs, find disconnected
//! subgraphs, decide relocations, and rewrite the facts accordingly.
//!
//! A subgraph that is accessed by exactly one foreign cluster (and not by its
//! own) is relocated to that cluster, turning a cross-cluster API into a
//! local call. Only field accesses and method calls are considered;
//! inheritance and interface dependencies are out of scope.

mod graph;

pub use graph::{build_intraclass_graph, disconnected_subgraphs, IntraClassGraph, NodeRef};

use crate::error::IsolationError;
use crate::facts::{cross_cluster_edges, ClassDecl, CodeFacts, FieldRef, MethodRef};
use crate::par;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// One connected component of a class's intra-class graph. Components
/// partition the class's members; ordinals follow the deterministic component
/// order (lexicographic by smallest node ref).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Subgraph {
    pub class_name: String,
    pub ordinal: usize,
    pub nodes: BTreeSet<NodeRef>,
}

impl Subgraph {
    pub fn contains_method(&self, mref: &MethodRef) -> bool {
        self.nodes.iter().any(|n| matches!(n, NodeRef::Method(m) if m == mref))
    }

    pub fn contains_field(&self, fref: &FieldRef) -> bool {
        self.nodes.iter().any(|n| matches!(n, NodeRef::Field(f) if f == fref))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Policy {
    /// Relocate whenever exactly one foreign cluster accesses the subgraph.
    PaperSimple,
    /// Additionally require that the move removes more cross-cluster edges
    /// than it creates.
    NetReduction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum KeepReason {
    MultiClusterAccess,
    HomeClusterAccess,
    NoExternalAccess,
    NetIncrease,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Relocate { target_cluster: String },
    Keep { reason: KeepReason },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelocationDecision {
    pub subgraph: Subgraph,
    pub verdict: Verdict,
    pub accessing_clusters: BTreeSet<String>,
    pub new_class_name: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClassStats {
    pub subgraphs: u64,
    pub relocated: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IsolationReport {
    pub iterations: u32,
    pub total_subgraphs: u64,
    pub relocated: u64,
    pub cross_edges_before: u64,
    pub cross_edges_after: u64,
    pub per_class: BTreeMap<String, ClassStats>,
    pub relocations_per_iteration: Vec<u64>,
}

impl IsolationReport {
    /// One line per class: `class,subgraphs,relocated`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,subgraphs,relocated\n");
        for (class, stats) in &self.per_class {
            out.push_str(&format!("{class},{},{}\n", stats.subgraphs, stats.relocated));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Iterations {
    Count(u32),
    Fixpoint,
}

/// The set of clusters containing at least one method outside `subgraph` that
/// calls a subgraph method or accesses a subgraph field. Includes the home
/// cluster when the access comes from a home-cluster class outside the
/// subgraph.
pub fn accessing_clusters(facts: &CodeFacts, subgraph: &Subgraph) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for call in &facts.calls {
        if subgraph.contains_method(&call.to) && !subgraph.contains_method(&call.from) {
            if let Some(cluster) = facts.cluster_of(&call.from.class) {
                out.insert(cluster.to_string());
            }
        }
    }
    for access in &facts.accesses {
        if subgraph.contains_field(&access.field) && !subgraph.contains_method(&access.from) {
            if let Some(cluster) = facts.cluster_of(&access.from.class) {
                out.insert(cluster.to_string());
            }
        }
    }
    out
}

/// Decide, for every subgraph of every class, whether it can be relocated.
pub fn relocation_candidates(facts: &CodeFacts, policy: Policy) -> Vec<RelocationDecision> {
    candidates_inner(facts, policy, false)
}

/// Sequential twin of [`relocation_candidates`], kept as a bench baseline.
pub fn relocation_candidates_sequential(facts: &CodeFacts, policy: Policy) -> Vec<RelocationDecision> {
    candidates_inner(facts, policy, true)
}

fn candidates_inner(facts: &CodeFacts, policy: Policy, sequential: bool) -> Vec<RelocationDecision> {
    let names: Vec<String> = facts.classes.iter().map(|c| c.name.clone()).collect();
    let decide = |name: String| decide_class(facts, &name, policy);
    let nested = if sequential {
        par::map_sequential(names, decide)
    } else {
        par::map(names, decide)
    };
    let mut decisions: Vec<RelocationDecision> = nested.into_iter().flatten().collect();
    assign_names(facts, &mut decisions);
    decisions
}

fn decide_class(facts: &CodeFacts, class_name: &str, policy: Policy) -> Vec<RelocationDecision> {
    let graph = match build_intraclass_graph(facts, class_name) {
        Ok(g) => g,
        Err(_) => return Vec::new(),
    };
    let home = facts.cluster_of(class_name).unwrap_or_default().to_string();
    let mut out = Vec::new();
    for subgraph in disconnected_subgraphs(&graph) {
        let accessing = accessing_clusters(facts, &subgraph);
        let has_constructor = subgraph.nodes.iter().any(|n| {
            matches!(n, NodeRef::Method(m) if facts
                .resolve_method(m)
                .map(|d| d.is_constructor)
                .unwrap_or(false))
        });
        let verdict = if has_constructor {
            // Constructors always stay with the original class.
            Verdict::Keep { reason: KeepReason::HomeClusterAccess }
        } else if accessing.is_empty() {
            Verdict::Keep { reason: KeepReason::NoExternalAccess }
        } else if accessing.contains(&home) {
            Verdict::Keep { reason: KeepReason::HomeClusterAccess }
        } else if accessing.len() > 1 {
            Verdict::Keep { reason: KeepReason::MultiClusterAccess }
        } else {
            let target = accessing.iter().next().unwrap().clone();
            match policy {
                Policy::PaperSimple => Verdict::Relocate { target_cluster: target },
                Policy::NetReduction => {
                    let (removed, created) = edge_delta(facts, &subgraph, &home, &target);
                    if removed > created {
                        Verdict::Relocate { target_cluster: target }
                    } else {
                        Verdict::Keep { reason: KeepReason::NetIncrease }
                    }
                }
            }
        };
        out.push(RelocationDecision {
            subgraph,
            verdict,
            accessing_clusters: accessing,
            new_class_name: None,
        });
    }
    out
}

/// Cross-cluster edges removed vs created by moving `subgraph` from `home`
/// to `target`. Inbound edges come only from `target` (the caller filtered
/// for that already); outbound edges to `target` become local, outbound
/// edges to `home` become cross-cluster. Edges to third clusters are cross
/// either way.
fn edge_delta(
    facts: &CodeFacts,
    subgraph: &Subgraph,
    home: &str,
    target: &str,
) -> (u64, u64) {
    let mut removed = 0u64;
    let mut created = 0u64;
    let tally = |other_cluster: Option<&str>, removed: &mut u64, created: &mut u64| {
        match other_cluster {
            Some(c) if c == target => *removed += 1,
            Some(c) if c == home => *created += 1,
            _ => {}
        }
    };
    for call in &facts.calls {
        let inbound = subgraph.contains_method(&call.to) && !subgraph.contains_method(&call.from);
        let outbound = subgraph.contains_method(&call.from)
            && !subgraph.contains_method(&call.to)
            && call.to.class != subgraph.class_name;
        if inbound {
            removed += 1;
        } else if outbound {
            tally(facts.cluster_of(&call.to.class), &mut removed, &mut created);
        }
    }
    for access in &facts.accesses {
        let inbound = subgraph.contains_field(&access.field) && !subgraph.contains_method(&access.from);
        let outbound = subgraph.contains_method(&access.from)
            && !subgraph.contains_field(&access.field)
            && access.field.class != subgraph.class_name;
        if inbound {
            removed += 1;
        } else if outbound {
            tally(facts.cluster_of(&access.field.class), &mut removed, &mut created);
        }
    }
    (removed, created)
}

/// Deterministic `<Class>_Iso<ordinal>` names, with `_x` appended until the
/// name is free of collisions.
fn assign_names(facts: &CodeFacts, decisions: &mut [RelocationDecision]) {
    let mut taken: BTreeSet<String> = facts.classes.iter().map(|c| c.name.clone()).collect();
    decisions.sort_by(|a, b| {
        (&a.subgraph.class_name, a.subgraph.ordinal).cmp(&(&b.subgraph.class_name, b.subgraph.ordinal))
    });
    for decision in decisions.iter_mut() {
        if matches!(decision.verdict, Verdict::Relocate { .. }) {
            let mut name =
                format!("{}_Iso{}", decision.subgraph.class_name, decision.subgraph.ordinal);
            while taken.contains(&name) {
                name.push_str("_x");
            }
            taken.insert(name.clone());
            decision.new_class_name = Some(name);
        }
    }
}

/// Rewrite the facts by moving every `Relocate`d subgraph into a new class in
/// its target cluster. Total method and field counts are preserved.
pub fn apply_relocations(
    facts: &CodeFacts,
    decisions: &[RelocationDecision],
) -> Result<CodeFacts, IsolationError> {
    let mut moved_methods: BTreeMap<MethodRef, String> = BTreeMap::new();
    let mut moved_fields: BTreeMap<FieldRef, String> = BTreeMap::new();
    let mut new_classes: Vec<ClassDecl> = Vec::new();

    for decision in decisions {
        let Verdict::Relocate { target_cluster } = &decision.verdict else {
            continue;
        };
        let new_name = decision.new_class_name.clone().ok_or_else(|| {
            IsolationError::ConflictingDecisions(format!(
                "relocation of {} subgraph {} has no assigned class name",
                decision.subgraph.class_name, decision.subgraph.ordinal
            ))
        })?;
        if facts.class(&decision.subgraph.class_name).is_none() {
            return Err(IsolationError::UnknownClass(decision.subgraph.class_name.clone()));
        }
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        for node in &decision.subgraph.nodes {
            match node {
                NodeRef::Method(m) => {
                    if moved_methods.insert(m.clone(), new_name.clone()).is_some() {
                        return Err(IsolationError::ConflictingDecisions(m.to_string()));
                    }
                    let decl = facts
                        .resolve_method(m)
                        .ok_or_else(|| IsolationError::UnknownClass(m.to_string()))?;
                    methods.push(decl.clone());
                }
                NodeRef::Field(f) => {
                    if moved_fields.insert(f.clone(), new_name.clone()).is_some() {
                        return Err(IsolationError::ConflictingDecisions(f.to_string()));
                    }
                    let decl = facts
                        .resolve_field(f)
                        .ok_or_else(|| IsolationError::UnknownClass(f.to_string()))?;
                    fields.push(decl.clone());
                }
            }
        }
        new_classes.push(ClassDecl {
            name: new_name,
            cluster: target_cluster.clone(),
            is_singleton: false,
            has_private_constructor: false,
            extends: None,
            fields,
            methods,
        });
    }

    let mut out = facts.clone();
    for class in &mut out.classes {
        class
            .fields
            .retain(|f| !moved_fields.contains_key(&FieldRef::new(&class.name, &f.name)));
        class.methods.retain(|m| {
            !moved_methods.contains_key(&MethodRef::new(&class.name, &m.name, m.arity()))
        });
    }
    out.classes.extend(new_classes);
    let remap_method = |mref: &mut MethodRef| {
        if let Some(new_class) = moved_methods.get(mref) {
            mref.class = new_class.clone();
        }
    };
    for call in &mut out.calls {
        remap_method(&mut call.from);
        remap_method(&mut call.to);
    }
    for access in &mut out.accesses {
        remap_method(&mut access.from);
        if let Some(new_class) = moved_fields.get(&access.field) {
            access.field.class = new_class.clone();
        }
    }
    out.normalize();
    Ok(out)
}

/// Repeat candidates→apply until the iteration budget is exhausted or no
/// decision relocates anything.
pub fn isolate(
    facts: &CodeFacts,
    iterations: Iterations,
    policy: Policy,
) -> Result<(CodeFacts, IsolationReport), IsolationError> {
    let budget = match iterations {
        Iterations::Count(n) => n,
        Iterations::Fixpoint => u32::MAX,
    };
    let mut current = facts.clone();
    let mut report = IsolationReport {
        cross_edges_before: cross_cluster_edges(facts).len() as u64,
        ..Default::default()
    };
    let mut executed = 0u32;
    while executed < budget {
        let decisions = relocation_candidates(&current, policy);
        executed += 1;
        if executed == 1 {
            report.total_subgraphs = decisions.len() as u64;
            for d in &decisions {
                report
                    .per_class
                    .entry(d.subgraph.class_name.clone())
                    .or_default()
                    .subgraphs += 1;
            }
        }
        let moves: Vec<&RelocationDecision> = decisions
            .iter()
            .filter(|d| matches!(d.verdict, Verdict::Relocate { .. }))
            .collect();
        if moves.is_empty() {
            // The fixpoint-detection round performed no work; don't count it
            // unless it was the only round.
            if matches!(iterations, Iterations::Fixpoint) && executed > 1 {
                executed -= 1;
            }
            break;
        }
        for d in &moves {
            report
                .per_class
                .entry(d.subgraph.class_name.clone())
                .or_default()
                .relocated += 1;
        }
        report.relocated += moves.len() as u64;
        report.relocations_per_iteration.push(moves.len() as u64);
        current = apply_relocations(&current, &decisions)?;
    }
    report.iterations = executed;
    report.cross_edges_after = cross_cluster_edges(&current).len() as u64;
    Ok((current, report))
}
