//! Scenario scripts: a deterministic program of heap operations and calls,
//! validated against a `CodeFacts` value before execution.

use crate::error::ScenarioError;
use crate::facts::{CodeFacts, Literal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Dot-separated field chain from a root variable, e.g. `profile.accountField.balance`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub root: String,
    pub fields: Vec<String>,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        for field in &self.fields {
            write!(f, ".{field}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Path {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('.');
        let root = parts.next().unwrap_or_default().to_string();
        if root.is_empty() {
            return Err(format!("empty path '{s}'"));
        }
        let fields: Vec<String> = parts.map(str::to_string).collect();
        if fields.iter().any(String::is_empty) {
            return Err(format!("empty segment in path '{s}'"));
        }
        Ok(Path { root, fields })
    }
}

impl Serialize for Path {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Path {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Arg {
    Var { var: String },
    Lit { lit: Literal },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CallTarget {
    Var(String),
    Class(String),
}

impl CallTarget {
    pub fn name(&self) -> &str {
        match self {
            CallTarget::Var(s) | CallTarget::Class(s) => s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Step {
    New {
        var: String,
        class: String,
    },
    /// Write a literal at a path.
    Set {
        path: Path,
        value: Literal,
    },
    /// Write the value found at `source` to `path`.
    Setref {
        path: Path,
        source: Path,
    },
    /// Bind `var` to the value at `path`.
    Alias {
        var: String,
        path: Path,
    },
    Call {
        /// A variable name or a declared class name; resolved at parse time
        /// against the facts.
        target: String,
        method: String,
        #[serde(default)]
        args: Vec<Arg>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capture: Option<String>,
    },
    Assert {
        path: Path,
        value: Literal,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioScript {
    /// Cluster that executes the script; defaults to the cluster of the
    /// first `new`ed class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client: Option<String>,
    pub steps: Vec<Step>,
}

impl ScenarioScript {
    /// Resolve a call target name against the facts: declared class names
    /// win, everything else is a variable.
    pub fn resolve_target(facts: &CodeFacts, name: &str) -> CallTarget {
        if facts.class(name).is_some() {
            CallTarget::Class(name.to_string())
        } else {
            CallTarget::Var(name.to_string())
        }
    }

    /// The cluster the script runs in.
    pub fn client_cluster(&self, facts: &CodeFacts) -> Option<String> {
        if let Some(c) = &self.client {
            return Some(c.clone());
        }
        for step in &self.steps {
            if let Step::New { class, .. } = step {
                return facts.cluster_of(class).map(str::to_string);
            }
        }
        facts.clusters.iter().next().cloned()
    }
}

/// Parse and validate a scenario document against `facts`. Unknown classes,
/// methods, and field names are rejected; variables must be defined before
/// use.
pub fn parse_scenario(text: &str, facts: &CodeFacts) -> Result<ScenarioScript, ScenarioError> {
    let script: ScenarioScript =
        serde_json::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    validate_scenario(&script, facts)?;
    Ok(script)
}

pub fn serialize_scenario(script: &ScenarioScript) -> String {
    let mut out = serde_json::to_string_pretty(script).expect("scenario serialize");
    out.push('\n');
    out
}

pub fn validate_scenario(script: &ScenarioScript, facts: &CodeFacts) -> Result<(), ScenarioError> {
    if let Some(client) = &script.client {
        if !facts.clusters.contains(client) {
            return Err(ScenarioError::Schema(format!("unknown client cluster '{client}'")));
        }
    }
    let known_fields: BTreeSet<&str> = facts
        .classes
        .iter()
        .flat_map(|c| c.fields.iter().map(|f| f.name.as_str()))
        .collect();
    let mut vars: BTreeSet<&str> = BTreeSet::new();
    let check_path = |path: &Path, vars: &BTreeSet<&str>| -> Result<(), ScenarioError> {
        if !vars.contains(path.root.as_str()) {
            return Err(ScenarioError::Binding(path.root.clone()));
        }
        for field in &path.fields {
            if !known_fields.contains(field.as_str()) {
                return Err(ScenarioError::Schema(format!(
                    "unknown field '{field}' in path '{path}'"
                )));
            }
        }
        Ok(())
    };
    for step in &script.steps {
        match step {
            Step::New { var, class } => {
                if facts.class(class).is_none() {
                    return Err(ScenarioError::Schema(format!("unknown class '{class}'")));
                }
                if facts.class(var).is_some() {
                    return Err(ScenarioError::Schema(format!(
                        "variable '{var}' shadows a class name"
                    )));
                }
                vars.insert(var);
            }
            Step::Set { path, .. } | Step::Assert { path, .. } => check_path(path, &vars)?,
            Step::Setref { path, source } => {
                check_path(path, &vars)?;
                check_path(source, &vars)?;
            }
            Step::Alias { var, path } => {
                check_path(path, &vars)?;
                if facts.class(var).is_some() {
                    return Err(ScenarioError::Schema(format!(
                        "variable '{var}' shadows a class name"
                    )));
                }
                vars.insert(var);
            }
            Step::Call { target, method, args, capture } => {
                match ScenarioScript::resolve_target(facts, target) {
                    CallTarget::Class(class) => {
                        if facts.lookup_method(&class, method, args.len()).is_none() {
                            return Err(ScenarioError::Schema(format!(
                                "unknown method '{class}.{method}/{}'",
                                args.len()
                            )));
                        }
                    }
                    CallTarget::Var(var) => {
                        if !vars.contains(var.as_str()) {
                            return Err(ScenarioError::Binding(var));
                        }
                    }
                }
                for arg in args {
                    if let Arg::Var { var } = arg {
                        if !vars.contains(var.as_str()) {
                            return Err(ScenarioError::Binding(var.clone()));
                        }
                    }
                }
                if let Some(var) = capture {
                    if facts.class(var).is_some() {
                        return Err(ScenarioError::Schema(format!(
                            "variable '{var}' shadows a class name"
                        )));
                    }
                    vars.insert(var);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::parse_facts;

    fn facts() -> CodeFacts {
        parse_facts(
            r#"{
                "clusters": ["c1"],
                "classes": [{
                    "name": "Node", "cluster": "c1",
                    "fields": [{"name": "next", "type": {"kind": "declared", "class": "Node"}}],
                    "methods": [{"name": "touch"}]
                }]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn empty_step_list_is_empty_script() {
        let script = parse_scenario(r#"{"steps": []}"#, &facts()).unwrap();
        assert!(script.steps.is_empty());
    }

    #[test]
    fn undeclared_field_is_schema_error() {
        let text = r#"{"steps": [
            {"op": "new", "var": "a", "class": "Node"},
            {"op": "set", "path": "a.nope", "value": 1}
        ]}"#;
        assert!(matches!(parse_scenario(text, &facts()), Err(ScenarioError::Schema(_))));
    }

    #[test]
    fn undefined_variable_is_binding_error() {
        let text = r#"{"steps": [{"op": "set", "path": "ghost.next", "value": null}]}"#;
        assert!(matches!(parse_scenario(text, &facts()), Err(ScenarioError::Binding(_))));
    }
}
