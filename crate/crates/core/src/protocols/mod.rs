//! Protocol interpreters: the same scenario executed under ID-passing and
//! JSON-passing communication, with per-service communication metrics and
//! eagerly detected information-loss findings, plus the comparison harness
//! that checks both against the monolith's final state.

pub mod compare;
pub mod exercise;
pub mod fuzz;
pub mod gen;
mod id;
mod json;

pub use compare::{compare_protocols, ComparisonReport, EngineResult};
pub use id::run_id_protocol;
pub use json::run_json_protocol;

use crate::simcore::{ContextState, FinalState};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Ways a JSON-serialized transfer loses information relative to shared-heap
/// semantics. The ID protocol produces none of these by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum FindingCategory {
    /// Two references to one object serialized as two separate copies.
    AliasLoss,
    /// A reference cycle cannot be serialized as a tree; the call aborts.
    CycleError,
    /// The callee mutated its receiver but `this` at the caller cannot be
    /// rebound to the returned copy.
    ThisNotUpdated,
    /// A call-site slot was rebound to a fresh copy while other references
    /// still point at the stale original.
    ReferenceRebindLoss,
    /// A static field written on the server side is invisible to the
    /// client's replica of the class.
    StaticLoss,
    /// Deserialization re-ran an observable constructor side effect.
    ConstructorSideEffect,
    /// Deserialization created a second instance of a singleton class.
    SingletonViolation,
    /// A resource-typed field (socket, handle, connection) was nulled out in
    /// transit.
    ResourceTransfer,
    /// A private field crossed the wire in plain text.
    PrivateExposure,
}

impl fmt::Display for FindingCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub category: FindingCategory,
    /// Index of the scenario step during which the loss occurred.
    pub step: usize,
    pub detail: String,
}

/// Communication and memory totals for one service.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ServiceMetrics {
    /// Remote calls issued by this service.
    pub api_calls: u64,
    /// Payload units sent by this service (requests it issues plus
    /// responses it returns). One unit per serialized object, field slot,
    /// or bare id.
    pub sent_units: u64,
    /// Objects resident in this service's heap after the run.
    pub resident_objects: u64,
}

/// Result of one engine run: the final state, per-service metrics, and any
/// loss findings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProtocolOutcome {
    pub state: FinalState,
    pub metrics: BTreeMap<String, ServiceMetrics>,
    pub findings: Vec<Finding>,
}

impl ProtocolOutcome {
    pub fn total_resident_objects(&self) -> u64 {
        self.metrics.values().map(|m| m.resident_objects).sum()
    }

    pub fn total_api_calls(&self) -> u64 {
        self.metrics.values().map(|m| m.api_calls).sum()
    }

    pub fn has_finding(&self, category: FindingCategory) -> bool {
        self.findings.iter().any(|f| f.category == category)
    }
}

/// Sum per-service counters by name, the view compared against the
/// monolith's single counter map.
pub(crate) fn aggregate_counters(
    services: &BTreeMap<String, ContextState>,
) -> BTreeMap<String, i64> {
    let mut out: BTreeMap<String, i64> = BTreeMap::new();
    for ctx in services.values() {
        for (name, value) in &ctx.counters {
            *out.entry(name.clone()).or_default() += value;
        }
    }
    out
}

pub(crate) fn resident_metrics(
    services: &BTreeMap<String, ContextState>,
    metrics: &mut BTreeMap<String, ServiceMetrics>,
) {
    for (name, ctx) in services {
        metrics.entry(name.clone()).or_default().resident_objects = ctx.heap.len() as u64;
    }
}
