//! Run one scenario under all three engines and compare canonical heap
//! fingerprints against the monolith ground truth.

use super::{ProtocolOutcome, ServiceMetrics};
use crate::facts::CodeFacts;
use crate::simcore::{heap_fingerprint, run_monolith, ScenarioScript};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EngineResult {
    pub fingerprint: String,
    pub outcome: ProtocolOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComparisonReport {
    pub monolith: EngineResult,
    pub id: EngineResult,
    pub json: EngineResult,
    pub id_matches_monolith: bool,
    pub json_matches_monolith: bool,
}

impl ComparisonReport {
    /// One human-readable line per engine.
    pub fn summary(&self) -> String {
        let verdict = |matches: bool| if matches { "matches monolith" } else { "DIVERGES" };
        format!(
            "id: {} | json: {} ({} finding{})\n",
            verdict(self.id_matches_monolith),
            verdict(self.json_matches_monolith),
            self.json.outcome.findings.len(),
            if self.json.outcome.findings.len() == 1 { "" } else { "s" },
        )
    }
}

/// Execute `scenario` under the monolith, ID, and JSON engines and compare
/// final-state fingerprints.
pub fn compare_protocols(facts: &CodeFacts, scenario: &ScenarioScript) -> ComparisonReport {
    let mono_state = run_monolith(facts, scenario);
    let mut mono_metrics: BTreeMap<String, ServiceMetrics> = BTreeMap::new();
    mono_metrics.insert(
        "main".to_string(),
        ServiceMetrics {
            resident_objects: mono_state
                .contexts
                .get("main")
                .map(|c| c.heap.len() as u64)
                .unwrap_or(0),
            ..ServiceMetrics::default()
        },
    );
    let monolith = EngineResult {
        fingerprint: heap_fingerprint(&mono_state),
        outcome: ProtocolOutcome {
            state: mono_state,
            metrics: mono_metrics,
            findings: Vec::new(),
        },
    };

    let id_outcome = super::run_id_protocol(facts, scenario);
    let id = EngineResult { fingerprint: heap_fingerprint(&id_outcome.state), outcome: id_outcome };

    let json_outcome = super::run_json_protocol(facts, scenario);
    let json =
        EngineResult { fingerprint: heap_fingerprint(&json_outcome.state), outcome: json_outcome };

    ComparisonReport {
        id_matches_monolith: id.fingerprint == monolith.fingerprint,
        json_matches_monolith: json.fingerprint == monolith.fingerprint,
        monolith,
        id,
        json,
    }
}
