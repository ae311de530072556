//! Graph-class evolution: schema model, versioning, an event-condition-action
//! propagation engine and its rule language.

pub mod document;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod id;
pub mod schema;
pub mod versioning;

pub use document::{load_text, LoadError, WorkspaceDocument};
pub use dsl::{parse_document, print_document, Diagnostic, Model, RuleDocument};
pub use engine::{
    BindTarget, Engine, EngineState, Event, PropagationAborted, PropagationTrace, RuleSet, TraceEntry, TraceStatus,
    Value,
};
pub use error::{SchemaError, SchemaResult};
pub use id::{ClassId, ClassKind};
pub use schema::{Class, GraphClass, NodeClass, RelationClass, Side, Workspace};
pub use versioning::{LineageEdge, VersionRegistry};
