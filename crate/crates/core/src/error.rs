use thiserror::Error;

use crate::id::{ClassId, ClassKind};
use crate::schema::{MemberKind, Side};

/// Failures of the raw workspace and versioning primitives.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("class `{0}` already exists")]
    DuplicateName(ClassId),
    #[error("relation `{relation}` references absent node `{endpoint}`")]
    DanglingEndpoint { relation: ClassId, endpoint: ClassId },
    #[error("unknown graph `{0}`")]
    UnknownGraph(ClassId),
    #[error("unknown class `{0}`")]
    UnknownClass(ClassId),
    #[error("`{id}` is a {found}, expected a {expected}")]
    WrongKind { id: ClassId, expected: ClassKind, found: ClassKind },
    #[error("node `{0}` still has incident relations")]
    IncidentRelationsRemain(ClassId),
    #[error("endpoint `{endpoint}` of `{relation}` is not in graph `{graph}`")]
    EndpointNotInGraph { relation: ClassId, endpoint: ClassId, graph: ClassId },
    #[error("relation `{0}` is still attached to an endpoint")]
    StillAttached(ClassId),
    #[error("`{relation}` is not in the {side} list of `{node}`")]
    NotPresent { node: ClassId, side: Side, relation: ClassId },
    #[error("`{relation}` is already in the {side} list of `{node}`")]
    AlreadyPresent { node: ClassId, side: Side, relation: ClassId },
    #[error("class `{class}` has no {kind} named `{name}`")]
    UnknownMember { class: ClassId, kind: MemberKind, name: String },
    #[error("class `{class}` already has a {kind} named `{name}`")]
    DuplicateMember { class: ClassId, kind: MemberKind, name: String },
    #[error("`{0}` does not belong to any graph")]
    NotInAnyGraph(ClassId),
    #[error("`{0}` belongs to several graphs")]
    AmbiguousContainment(ClassId),
    #[error("node `{0}` is not versionable")]
    NotVersionable(ClassId),
    #[error("`{0}` was already versioned in this propagation")]
    AlreadyVersionedInPropagation(ClassId),
    #[error("endpoints of `{0}` are already set")]
    EndpointsAlreadySet(ClassId),
    #[error("version relation `{0}` was left without endpoints")]
    DanglingVersionEndpoints(ClassId),
    #[error("`{0}` is not a leaf version")]
    NotALeafVersion(ClassId),
    #[error("invalid class name `{0}`")]
    InvalidName(String),
}

pub type SchemaResult<T> = Result<T, SchemaError>;
