//! Per-class method-field graphs and connected-component detection.

use super::Subgraph;
use crate::error::IsolationError;
use crate::facts::{CodeFacts, FieldRef, MethodRef};
use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A node of an intra-class graph: one of the class's methods or fields.
/// Ordering is lexicographic on the rendered ref string.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Method(MethodRef),
    Field(FieldRef),
}

impl NodeRef {
    pub fn key(&self) -> String {
        match self {
            NodeRef::Method(m) => m.to_string(),
            NodeRef::Field(f) => f.to_string(),
        }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

impl Ord for NodeRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for NodeRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for NodeRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.key())
    }
}

/// Undirected graph over one class's methods and fields. Edges exist only
/// between members of the same class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntraClassGraph {
    pub class_name: String,
    pub nodes: BTreeSet<NodeRef>,
    /// Normalized pairs: `(a, b)` with `a < b`.
    pub edges: BTreeSet<(NodeRef, NodeRef)>,
}

/// Nodes are all methods and fields of the class; an undirected edge links
/// `m` to `m'` for every intra-class call and `m` to `f` for every
/// intra-class access. Inter-class edges are excluded.
pub fn build_intraclass_graph(
    facts: &CodeFacts,
    class_name: &str,
) -> Result<IntraClassGraph, IsolationError> {
    let class = facts
        .class(class_name)
        .ok_or_else(|| IsolationError::UnknownClass(class_name.to_string()))?;
    let mut nodes = BTreeSet::new();
    for method in &class.methods {
        nodes.insert(NodeRef::Method(MethodRef::new(class_name, &method.name, method.arity())));
    }
    for field in &class.fields {
        nodes.insert(NodeRef::Field(FieldRef::new(class_name, &field.name)));
    }
    let mut edges = BTreeSet::new();
    let mut add_edge = |a: NodeRef, b: NodeRef| {
        if a != b {
            let pair = if a < b { (a, b) } else { (b, a) };
            edges.insert(pair);
        }
    };
    for call in &facts.calls {
        if call.from.class == class_name && call.to.class == class_name {
            add_edge(NodeRef::Method(call.from.clone()), NodeRef::Method(call.to.clone()));
        }
    }
    for access in &facts.accesses {
        if access.from.class == class_name && access.field.class == class_name {
            add_edge(NodeRef::Method(access.from.clone()), NodeRef::Field(access.field.clone()));
        }
    }
    edges.retain(|(a, b)| nodes.contains(a) && nodes.contains(b));
    Ok(IntraClassGraph { class_name: class_name.to_string(), nodes, edges })
}

/// Connected components via union-find, in deterministic order (sorted by
/// each component's smallest node ref). Components partition the node set.
pub fn disconnected_subgraphs(graph: &IntraClassGraph) -> Vec<Subgraph> {
    let nodes: Vec<&NodeRef> = graph.nodes.iter().collect();
    let index: BTreeMap<&NodeRef, usize> =
        nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut dsu = Dsu::new(nodes.len());
    for (a, b) in &graph.edges {
        dsu.union(index[a], index[b]);
    }
    let mut components: BTreeMap<usize, BTreeSet<NodeRef>> = BTreeMap::new();
    for (i, node) in nodes.iter().enumerate() {
        components.entry(dsu.find(i)).or_default().insert((*node).clone());
    }
    let mut groups: Vec<BTreeSet<NodeRef>> = components.into_values().collect();
    // BTreeSet iteration gives the smallest node first.
    groups.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    groups
        .into_iter()
        .enumerate()
        .map(|(i, nodes)| Subgraph {
            class_name: graph.class_name.clone(),
            ordinal: i + 1,
            nodes,
        })
        .collect()
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Deterministic: smaller index wins as root.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
