//! Version derivation and lineage.
//!
//! A version of a class has the same name and the next free version number.
//! Lineage per name is linear: every new version hangs off the current tip,
//! so each edge raises the version number by exactly one.
//!
//! Inside one propagation the registry also records `V(x)`, the version
//! created for `x` during that propagation. Graph versions are created empty
//! and receive their members when the propagation commits, so that the
//! order in which nodes and relations get versioned does not matter.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{SchemaError, SchemaResult};
use crate::id::{ClassId, ClassKind};
use crate::schema::{Class, GraphClass, NodeClass, RelationClass, Side, Workspace};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineageEdge {
    pub parent: ClassId,
    pub child: ClassId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VersionScope {
    /// `V(x)` as bound by the current (or most recent) propagation.
    Propagation,
    /// The newest version of the same name, if newer than `x`.
    Latest,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VersionRegistry {
    lineage: Vec<LineageEdge>,
    current: BTreeMap<ClassId, ClassId>,
}

impl VersionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_lineage(lineage: Vec<LineageEdge>) -> Self {
        VersionRegistry { lineage, current: BTreeMap::new() }
    }

    pub fn lineage(&self) -> &[LineageEdge] {
        &self.lineage
    }

    pub fn current_bindings(&self) -> &BTreeMap<ClassId, ClassId> {
        &self.current
    }

    pub fn begin_propagation(&mut self) {
        self.current.clear();
    }

    /// Highest version number known for `name`, from live classes and lineage.
    pub fn latest_number(&self, ws: &Workspace, name: &str) -> Option<u32> {
        let live = ws.classes().map(Class::id).filter(|id| id.name == name).map(|id| id.version);
        let recorded = self
            .lineage
            .iter()
            .flat_map(|e| [&e.parent, &e.child])
            .filter(|id| id.name == name)
            .map(|id| id.version);
        live.chain(recorded).max()
    }

    pub fn version_of(&self, ws: &Workspace, id: &ClassId, scope: VersionScope) -> Option<ClassId> {
        match scope {
            VersionScope::Propagation => self.current.get(id).cloned(),
            VersionScope::Latest => ws
                .classes()
                .map(Class::id)
                .filter(|c| c.name == id.name && c.version > id.version)
                .max_by_key(|c| c.version)
                .cloned(),
        }
    }

    fn next_id(&self, ws: &Workspace, of: &ClassId) -> (ClassId, ClassId) {
        let tip = self.latest_number(ws, &of.name).unwrap_or(of.version).max(of.version);
        let parent = ClassId::versioned(of.name.clone(), tip);
        (parent.clone(), parent.next_version())
    }

    fn record(&mut self, original: &ClassId, parent: ClassId, child: &ClassId) {
        self.lineage.push(LineageEdge { parent, child: child.clone() });
        self.current.insert(original.clone(), child.clone());
    }

    fn ensure_unversioned(&self, id: &ClassId) -> SchemaResult<()> {
        if self.current.contains_key(id) {
            return Err(SchemaError::AlreadyVersionedInPropagation(id.clone()));
        }
        Ok(())
    }

    /// New version of a node: same members, no incident relations, in no graph.
    pub fn execute_create_version_node(&mut self, ws: &mut Workspace, node: &ClassId) -> SchemaResult<ClassId> {
        let n = ws.node(node)?;
        if !n.versionable {
            return Err(SchemaError::NotVersionable(node.clone()));
        }
        self.ensure_unversioned(node)?;
        let (parent, child) = self.next_id(ws, node);
        let version = NodeClass { members: n.members.clone(), versionable: n.versionable, ..NodeClass::new(child.clone()) };
        ws.insert_class(Class::Node(version))?;
        self.record(node, parent, &child);
        Ok(child)
    }

    /// New version of a relation with the same semantics and unset endpoints.
    pub fn derive_relation(&mut self, ws: &mut Workspace, rel: &ClassId) -> SchemaResult<ClassId> {
        let r = ws.relation(rel)?;
        self.ensure_unversioned(rel)?;
        let (parent, child) = self.next_id(ws, rel);
        let version = RelationClass::from_descriptor(child.clone(), r.descriptor(), None, None);
        ws.insert_class(Class::Relation(version))?;
        self.record(rel, parent, &child);
        Ok(child)
    }

    /// Wires a derived relation to its endpoints and attaches it to both.
    pub fn assign_version_endpoints(
        &mut self,
        ws: &mut Workspace,
        vrel: &ClassId,
        source: &ClassId,
        destination: &ClassId,
    ) -> SchemaResult<()> {
        let r = ws.relation(vrel)?;
        if r.source.is_some() || r.destination.is_some() {
            return Err(SchemaError::EndpointsAlreadySet(vrel.clone()));
        }
        ws.node(source)?;
        ws.node(destination)?;
        let r = ws.relation_mut(vrel)?;
        r.source = Some(source.clone());
        r.destination = Some(destination.clone());
        ws.exec_attach(source, Side::Efferent, vrel)?;
        ws.exec_attach(destination, Side::Afferent, vrel)?;
        Ok(())
    }

    /// Version of a graph; idempotent within one propagation.
    pub fn execute_create_version_graph(&mut self, ws: &mut Workspace, graph: &ClassId) -> SchemaResult<ClassId> {
        let g = ws.graph(graph)?;
        if let Some(v) = self.current.get(graph) {
            return Ok(v.clone());
        }
        let (parent, child) = self.next_id(ws, graph);
        let version = GraphClass { members: g.members.clone(), ..GraphClass::new(child.clone()) };
        ws.insert_class(Class::Graph(version))?;
        self.record(graph, parent, &child);
        Ok(child)
    }

    /// Commit step: fills version graphs and rejects unwired relation versions.
    ///
    /// A version graph holds `V(x)` for every member `x` of the original that
    /// was versioned in this propagation and `x` itself otherwise. Relations
    /// whose endpoints did not both make it into the node set are left out,
    /// which keeps the version graph closed.
    pub fn finalize(&self, ws: &mut Workspace) -> SchemaResult<()> {
        for version in self.current.values() {
            if let Ok(r) = ws.relation(version) {
                if r.source.is_none() || r.destination.is_none() {
                    return Err(SchemaError::DanglingVersionEndpoints(version.clone()));
                }
            }
        }
        let graphs: Vec<(ClassId, ClassId)> = self
            .current
            .iter()
            .filter(|(_, v)| ws.kind_of(v) == Some(ClassKind::Graph))
            .map(|(o, v)| (o.clone(), v.clone()))
            .collect();
        for (orig, version) in graphs {
            let Ok(g) = ws.graph(&orig) else { continue };
            let map = |x: &ClassId| self.current.get(x).cloned().unwrap_or_else(|| x.clone());
            let nodes: Vec<ClassId> = g.nodes.iter().map(map).collect();
            let relations: Vec<ClassId> = g
                .relations
                .iter()
                .map(map)
                .filter(|r| {
                    ws.relation(r).is_ok_and(|r| r.endpoints().count() == 2 && r.endpoints().all(|e| nodes.contains(e)))
                })
                .collect();
            ws.set_graph_contents(&version, nodes, relations)?;
        }
        Ok(())
    }

    /// Removes a version that has no descendants and nothing pointing at it.
    pub fn delete_leaf_version(&mut self, ws: &mut Workspace, id: &ClassId) -> SchemaResult<()> {
        let class = ws.get(id).ok_or_else(|| SchemaError::UnknownClass(id.clone()))?;
        let has_child = self.lineage.iter().any(|e| &e.parent == id);
        if id.version == 0 || has_child {
            return Err(SchemaError::NotALeafVersion(id.clone()));
        }
        if ws.graphs_containing(id).next().is_some() {
            return Err(SchemaError::StillAttached(id.clone()));
        }
        match class {
            Class::Node(n) if !n.is_isolated() => return Err(SchemaError::IncidentRelationsRemain(id.clone())),
            Class::Relation(r) => {
                let attached = r.source.as_ref().is_some_and(|s| ws.node(s).is_ok_and(|n| n.efferent.contains(id)))
                    || r.destination.as_ref().is_some_and(|d| ws.node(d).is_ok_and(|n| n.afferent.contains(id)));
                if attached {
                    return Err(SchemaError::StillAttached(id.clone()));
                }
            }
            _ => {}
        }
        ws.remove_class(id);
        self.lineage.retain(|e| &e.child != id);
        self.current.retain(|_, v| v != id);
        Ok(())
    }

    pub(crate) fn rename(&mut self, old: &ClassId, new: &ClassId) {
        let swap = |x: &mut ClassId| {
            if x == old {
                *x = new.clone();
            }
        };
        for e in &mut self.lineage {
            swap(&mut e.parent);
            swap(&mut e.child);
        }
        self.current = std::mem::take(&mut self.current)
            .into_iter()
            .map(|(mut k, mut v)| {
                swap(&mut k);
                swap(&mut v);
                (k, v)
            })
            .collect();
    }

    /// True when lineage edges form no cycle and every edge bumps the version by one.
    pub fn lineage_is_well_formed(&self) -> bool {
        self.lineage
            .iter()
            .all(|e| e.parent.name == e.child.name && e.child.version == e.parent.version + 1)
    }
}
