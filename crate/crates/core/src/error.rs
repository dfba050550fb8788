use thiserror::Error;

/// Errors raised while ingesting a facts document.
#[derive(Debug, Error)]
pub enum FactsError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
}

/// Errors raised while parsing or binding a scenario script.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("undefined variable '{0}'")]
    Binding(String),
}

#[derive(Debug, Error)]
pub enum IsolationError {
    #[error("unknown class '{0}'")]
    UnknownClass(String),
    #[error("conflicting relocation decisions: {0}")]
    ConflictingDecisions(String),
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    /// A registry miss in the ID engine. Signals an engine bug, never
    /// expected during normal execution.
    #[error("unknown gid {0}")]
    UnknownGid(String),
    #[error("unimplemented: {0}")]
    Unimplemented(String),
}
