//! Analysis and simulation toolkit for splitting a clustered monolith into
//! microservices.
//!
//! The pipeline operates on a language-agnostic facts file describing classes,
//! fields, methods, call/access edges, and a cluster assignment:
//!
//! * [`facts`] — data model, ingestion, validation.
//! * [`isolation`] — per-class disconnected-subgraph detection and relocation.
//! * [`classify`] — transfer-safety categories for the cross-cluster API surface.
//! * [`plan`] — wrapper/endpoint refactoring plan generation.
//! * [`simcore`] — object-heap model, scenario scripts, monolith reference
//!   interpreter, and heap fingerprinting.
//! * [`protocols`] — ID-passing and JSON-passing engines with divergence
//!   detection and cost metrics.

pub mod classify;
pub mod error;
pub mod facts;
pub mod isolation;
pub mod par;
pub mod plan;
pub mod protocols;
pub mod simcore;
