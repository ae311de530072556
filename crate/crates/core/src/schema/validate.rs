use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{Side, Workspace};
use crate::error::SchemaResult;
use crate::id::{ClassId, ClassKind};

/// A broken structural invariant, naming the offending classes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "violation", rename_all = "camelCase")]
pub enum Violation {
    /// A graph lists a relation whose endpoint is not among its nodes.
    DanglingEndpoint { graph: ClassId, relation: ClassId, endpoint: ClassId },
    /// A relation in the graph has no source or destination.
    UnsetEndpoint { graph: ClassId, relation: ClassId },
    /// A node's incident list and a relation's endpoints disagree.
    AfferentEfferentMismatch { node: ClassId, relation: ClassId },
    /// A graph lists the same class twice.
    DuplicateMember { graph: ClassId, member: ClassId },
    /// A graph lists an id that is absent or of the wrong kind.
    BadMember { graph: ClassId, member: ClassId, expected: ClassKind },
    /// The membership index disagrees with the graph's sets.
    MembershipMismatch { graph: ClassId, member: ClassId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingEndpoint { graph, relation, endpoint } => {
                write!(f, "{graph}: relation {relation} has endpoint {endpoint} outside the graph")
            }
            Violation::UnsetEndpoint { graph, relation } => {
                write!(f, "{graph}: relation {relation} has an unset endpoint")
            }
            Violation::AfferentEfferentMismatch { node, relation } => {
                write!(f, "incident lists of {node} disagree with relation {relation}")
            }
            Violation::DuplicateMember { graph, member } => write!(f, "{graph}: {member} listed twice"),
            Violation::BadMember { graph, member, expected } => {
                write!(f, "{graph}: {member} is not an existing {expected}")
            }
            Violation::MembershipMismatch { graph, member } => {
                write!(f, "{graph}: membership index out of sync for {member}")
            }
        }
    }
}

impl Workspace {
    /// Checks the graph, node and membership invariants for one graph.
    pub fn validate(&self, graph_id: &ClassId) -> SchemaResult<Vec<Violation>> {
        let graph = self.graph(graph_id)?;
        let mut out = Vec::new();
        let g = || graph_id.clone();

        let mut seen = BTreeSet::new();
        for (ids, expected) in [(&graph.nodes, ClassKind::Node), (&graph.relations, ClassKind::Relation)] {
            for id in ids {
                if !seen.insert(id) {
                    out.push(Violation::DuplicateMember { graph: g(), member: id.clone() });
                }
                if self.kind_of(id) != Some(expected) {
                    out.push(Violation::BadMember { graph: g(), member: id.clone(), expected });
                }
                if !self.graphs_containing(id).any(|x| x == graph_id) {
                    out.push(Violation::MembershipMismatch { graph: g(), member: id.clone() });
                }
            }
        }
        for (member, graphs) in self.membership() {
            if graphs.contains(graph_id) && !graph.contains(member) {
                out.push(Violation::MembershipMismatch { graph: g(), member: member.clone() });
            }
        }

        // Relation side: every endpoint in the graph and listing the relation.
        for rid in &graph.relations {
            let Ok(rel) = self.relation(rid) else { continue };
            for (end, side) in [(&rel.source, Side::Efferent), (&rel.destination, Side::Afferent)] {
                let Some(end) = end else {
                    out.push(Violation::UnsetEndpoint { graph: g(), relation: rid.clone() });
                    continue;
                };
                if !graph.nodes.contains(end) {
                    out.push(Violation::DanglingEndpoint { graph: g(), relation: rid.clone(), endpoint: end.clone() });
                }
                if let Ok(node) = self.node(end) {
                    if !node.side(side).contains(rid) {
                        out.push(Violation::AfferentEfferentMismatch { node: end.clone(), relation: rid.clone() });
                    }
                }
            }
        }

        // Node side: every listed relation exists and points back here.
        for nid in &graph.nodes {
            let Ok(node) = self.node(nid) else { continue };
            for side in [Side::Afferent, Side::Efferent] {
                let mut listed = BTreeSet::new();
                for rid in node.side(side) {
                    let back = self.relation(rid).ok().and_then(|r| match side {
                        Side::Afferent => r.destination.as_ref(),
                        Side::Efferent => r.source.as_ref(),
                    });
                    if back != Some(nid) || !listed.insert(rid) {
                        out.push(Violation::AfferentEfferentMismatch { node: nid.clone(), relation: rid.clone() });
                    }
                }
            }
        }

        out.dedup();
        Ok(out)
    }

    /// Violations across every graph in the workspace.
    pub fn validate_all(&self) -> Vec<Violation> {
        let ids: Vec<ClassId> = self.graphs().map(|g| g.id.clone()).collect();
        ids.iter().flat_map(|g| self.validate(g).unwrap_or_default()).collect()
    }
}
