use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;

use super::{Class, GraphClass, Member, MemberKind, NodeClass, RelationClass, Side};
use crate::error::{SchemaError, SchemaResult};
use crate::id::{ClassId, ClassKind};

/// A single structural change to a class definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemberChange {
    Add(Member),
    Delete { kind: MemberKind, name: String },
    Rename { kind: MemberKind, from: String, to: String },
    RenameClass(String),
}

/// The set of classes being designed, plus the graph-membership index.
///
/// The `exec_*` methods are the raw primitives: they apply exactly one
/// change and refuse to cascade. Anything that has to ripple through the
/// graph goes through the rule engine.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Workspace {
    classes: IndexMap<ClassId, Class>,
    membership: BTreeMap<ClassId, BTreeSet<ClassId>>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    // ---- read access -------------------------------------------------------

    pub fn get(&self, id: &ClassId) -> Option<&Class> {
        self.classes.get(id)
    }

    pub fn contains(&self, id: &ClassId) -> bool {
        self.classes.contains_key(id)
    }

    pub fn kind_of(&self, id: &ClassId) -> Option<ClassKind> {
        self.classes.get(id).map(Class::kind)
    }

    pub fn classes(&self) -> impl Iterator<Item = &Class> {
        self.classes.values()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn graphs(&self) -> impl Iterator<Item = &GraphClass> {
        self.classes.values().filter_map(Class::as_graph)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeClass> {
        self.classes.values().filter_map(Class::as_node)
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationClass> {
        self.classes.values().filter_map(Class::as_relation)
    }

    pub fn node(&self, id: &ClassId) -> SchemaResult<&NodeClass> {
        match self.classes.get(id) {
            Some(Class::Node(n)) => Ok(n),
            Some(other) => Err(wrong_kind(id, ClassKind::Node, other.kind())),
            None => Err(SchemaError::UnknownClass(id.clone())),
        }
    }

    pub fn relation(&self, id: &ClassId) -> SchemaResult<&RelationClass> {
        match self.classes.get(id) {
            Some(Class::Relation(r)) => Ok(r),
            Some(other) => Err(wrong_kind(id, ClassKind::Relation, other.kind())),
            None => Err(SchemaError::UnknownClass(id.clone())),
        }
    }

    pub fn graph(&self, id: &ClassId) -> SchemaResult<&GraphClass> {
        match self.classes.get(id) {
            Some(Class::Graph(g)) => Ok(g),
            Some(other) => Err(wrong_kind(id, ClassKind::Graph, other.kind())),
            None => Err(SchemaError::UnknownGraph(id.clone())),
        }
    }

    pub(crate) fn node_mut(&mut self, id: &ClassId) -> SchemaResult<&mut NodeClass> {
        match self.classes.get_mut(id) {
            Some(Class::Node(n)) => Ok(n),
            Some(other) => Err(wrong_kind(id, ClassKind::Node, other.kind())),
            None => Err(SchemaError::UnknownClass(id.clone())),
        }
    }

    pub(crate) fn relation_mut(&mut self, id: &ClassId) -> SchemaResult<&mut RelationClass> {
        match self.classes.get_mut(id) {
            Some(Class::Relation(r)) => Ok(r),
            Some(other) => Err(wrong_kind(id, ClassKind::Relation, other.kind())),
            None => Err(SchemaError::UnknownClass(id.clone())),
        }
    }

    fn graph_mut(&mut self, id: &ClassId) -> SchemaResult<&mut GraphClass> {
        match self.classes.get_mut(id) {
            Some(Class::Graph(g)) => Ok(g),
            Some(other) => Err(wrong_kind(id, ClassKind::Graph, other.kind())),
            None => Err(SchemaError::UnknownGraph(id.clone())),
        }
    }

    /// Graphs whose node or relation set contains `id`.
    pub fn graphs_containing(&self, id: &ClassId) -> impl Iterator<Item = &ClassId> {
        self.membership.get(id).into_iter().flatten()
    }

    pub(crate) fn membership(&self) -> &BTreeMap<ClassId, BTreeSet<ClassId>> {
        &self.membership
    }

    // ---- construction ------------------------------------------------------

    /// Builds a graph class from fresh nodes and relations. Incident lists are
    /// derived from the relations in the order given.
    pub fn create_graph(
        &mut self,
        name: &str,
        nodes: Vec<NodeClass>,
        relations: Vec<RelationClass>,
    ) -> SchemaResult<ClassId> {
        let gid: ClassId = name.parse().map_err(|_| SchemaError::InvalidName(name.to_string()))?;
        let mut fresh = BTreeSet::new();
        for id in std::iter::once(&gid)
            .chain(nodes.iter().map(|n| &n.id))
            .chain(relations.iter().map(|r| &r.id))
        {
            if self.contains(id) || !fresh.insert(id.clone()) {
                return Err(SchemaError::DuplicateName(id.clone()));
            }
        }
        let node_ids: BTreeSet<&ClassId> = nodes.iter().map(|n| &n.id).collect();
        for r in &relations {
            for end in [&r.source, &r.destination] {
                match end {
                    Some(e) if node_ids.contains(e) => {}
                    Some(e) => {
                        return Err(SchemaError::DanglingEndpoint {
                            relation: r.id.clone(),
                            endpoint: e.clone(),
                        })
                    }
                    None => return Err(SchemaError::DanglingVersionEndpoints(r.id.clone())),
                }
            }
        }

        let mut graph = GraphClass::new(gid.clone());
        for mut n in nodes {
            n.afferent.clear();
            n.efferent.clear();
            graph.nodes.push(n.id.clone());
            self.classes.insert(n.id.clone(), Class::Node(n));
        }
        for r in relations {
            let (src, dst) = (r.source.clone().unwrap(), r.destination.clone().unwrap());
            graph.relations.push(r.id.clone());
            self.node_mut(&src)?.efferent.push(r.id.clone());
            self.node_mut(&dst)?.afferent.push(r.id.clone());
            self.classes.insert(r.id.clone(), Class::Relation(r));
        }
        for m in graph.nodes.iter().chain(&graph.relations) {
            self.membership.entry(m.clone()).or_default().insert(gid.clone());
        }
        self.classes.insert(gid.clone(), Class::Graph(graph));
        Ok(gid)
    }

    /// Inserts a class record as-is, without touching any other class.
    ///
    /// Used when loading documents and by version derivation. Graph records
    /// have their membership indexed; node incident lists are taken verbatim.
    pub fn insert_class(&mut self, class: Class) -> SchemaResult<()> {
        let id = class.id().clone();
        if self.contains(&id) {
            return Err(SchemaError::DuplicateName(id));
        }
        if let Class::Graph(g) = &class {
            for m in g.nodes.iter().chain(&g.relations) {
                self.membership.entry(m.clone()).or_default().insert(id.clone());
            }
        }
        self.classes.insert(id, class);
        Ok(())
    }

    /// Sets the node and relation sets of a graph, reindexing membership.
    pub(crate) fn set_graph_contents(
        &mut self,
        gid: &ClassId,
        nodes: Vec<ClassId>,
        relations: Vec<ClassId>,
    ) -> SchemaResult<()> {
        let g = self.graph_mut(gid)?;
        let old: Vec<ClassId> = g.nodes.drain(..).chain(g.relations.drain(..)).collect();
        g.nodes = nodes;
        g.relations = relations;
        let new: Vec<ClassId> = g.nodes.iter().chain(&g.relations).cloned().collect();
        for m in old {
            self.unindex(&m, gid);
        }
        for m in new {
            self.membership.entry(m).or_default().insert(gid.clone());
        }
        Ok(())
    }

    fn unindex(&mut self, member: &ClassId, graph: &ClassId) {
        if let Some(set) = self.membership.get_mut(member) {
            set.remove(graph);
            if set.is_empty() {
                self.membership.remove(member);
            }
        }
    }

    /// Removes a class record without any precondition. Callers guarantee
    /// the record is unreferenced.
    pub(crate) fn remove_class(&mut self, id: &ClassId) -> Option<Class> {
        let class = self.classes.shift_remove(id)?;
        let graphs: Vec<ClassId> = self.graphs_containing(id).cloned().collect();
        for gid in graphs {
            if let Ok(g) = self.graph_mut(&gid) {
                g.nodes.retain(|x| x != id);
                g.relations.retain(|x| x != id);
            }
        }
        self.membership.remove(id);
        if let Class::Graph(g) = &class {
            for m in g.nodes.iter().chain(&g.relations) {
                self.unindex(m, id);
            }
        }
        Some(class)
    }

    // ---- raw primitives ----------------------------------------------------

    pub fn exec_add_node(&mut self, graph: &ClassId, node: NodeClass) -> SchemaResult<()> {
        self.graph(graph)?;
        if self.contains(&node.id) {
            return Err(SchemaError::DuplicateName(node.id));
        }
        let id = node.id.clone();
        let node = NodeClass { afferent: Vec::new(), efferent: Vec::new(), ..node };
        self.classes.insert(id.clone(), Class::Node(node));
        self.graph_mut(graph)?.nodes.push(id.clone());
        self.membership.entry(id).or_default().insert(graph.clone());
        Ok(())
    }

    /// Deletes an isolated node. Never cascades.
    pub fn exec_delete_node(&mut self, id: &ClassId) -> SchemaResult<()> {
        if !self.node(id)?.is_isolated() {
            return Err(SchemaError::IncidentRelationsRemain(id.clone()));
        }
        self.remove_class(id);
        Ok(())
    }

    pub fn exec_add_relation(&mut self, graph: &ClassId, spec: RelationClass) -> SchemaResult<ClassId> {
        let g = self.graph(graph)?;
        if self.contains(&spec.id) {
            return Err(SchemaError::DuplicateName(spec.id));
        }
        for end in [&spec.source, &spec.destination] {
            match end {
                Some(e) if g.nodes.contains(e) && self.node(e).is_ok() => {}
                Some(e) => {
                    return Err(SchemaError::EndpointNotInGraph {
                        relation: spec.id.clone(),
                        endpoint: e.clone(),
                        graph: graph.clone(),
                    })
                }
                None => return Err(SchemaError::DanglingVersionEndpoints(spec.id.clone())),
            }
        }
        let id = spec.id.clone();
        let (src, dst) = (spec.source.clone().unwrap(), spec.destination.clone().unwrap());
        self.classes.insert(id.clone(), Class::Relation(spec));
        self.node_mut(&src)?.efferent.push(id.clone());
        self.node_mut(&dst)?.afferent.push(id.clone());
        self.graph_mut(graph)?.relations.push(id.clone());
        self.membership.entry(id.clone()).or_default().insert(graph.clone());
        Ok(id)
    }

    /// Deletes a relation that has already been detached from both endpoints.
    pub fn exec_delete_relation(&mut self, id: &ClassId) -> SchemaResult<()> {
        let rel = self.relation(id)?;
        let attached = |end: &Option<ClassId>, side: Side| {
            end.as_ref()
                .and_then(|e| self.node(e).ok())
                .is_some_and(|n| n.side(side).contains(id))
        };
        if attached(&rel.source, Side::Efferent) || attached(&rel.destination, Side::Afferent) {
            return Err(SchemaError::StillAttached(id.clone()));
        }
        self.remove_class(id);
        Ok(())
    }

    pub fn exec_detach(&mut self, node: &ClassId, side: Side, rel: &ClassId) -> SchemaResult<()> {
        let list = self.node_mut(node)?.side_mut(side);
        match list.iter().position(|r| r == rel) {
            Some(i) => {
                list.remove(i);
                Ok(())
            }
            None => Err(SchemaError::NotPresent { node: node.clone(), side, relation: rel.clone() }),
        }
    }

    pub fn exec_attach(&mut self, node: &ClassId, side: Side, rel: &ClassId) -> SchemaResult<()> {
        self.relation(rel)?;
        let list = self.node_mut(node)?.side_mut(side);
        if list.contains(rel) {
            return Err(SchemaError::AlreadyPresent { node: node.clone(), side, relation: rel.clone() });
        }
        list.push(rel.clone());
        Ok(())
    }

    /// Applies one member change, or renames the class and rewrites every
    /// reference to it. Returns the class id after the change.
    pub fn exec_member_change(&mut self, id: &ClassId, change: MemberChange) -> SchemaResult<ClassId> {
        let class = self.classes.get_mut(id).ok_or_else(|| SchemaError::UnknownClass(id.clone()))?;
        match change {
            MemberChange::Add(m) => {
                let members = class.members_mut();
                if members.iter().any(|x| x.member_kind == m.member_kind && x.name == m.name) {
                    return Err(SchemaError::DuplicateMember { class: id.clone(), kind: m.member_kind, name: m.name });
                }
                members.push(m);
            }
            MemberChange::Delete { kind, name } => {
                let members = class.members_mut();
                let i = members
                    .iter()
                    .position(|x| x.member_kind == kind && x.name == name)
                    .ok_or_else(|| SchemaError::UnknownMember { class: id.clone(), kind, name })?;
                members.remove(i);
            }
            MemberChange::Rename { kind, from, to } => {
                let members = class.members_mut();
                if members.iter().any(|x| x.member_kind == kind && x.name == to) {
                    return Err(SchemaError::DuplicateMember { class: id.clone(), kind, name: to });
                }
                let m = members
                    .iter_mut()
                    .find(|x| x.member_kind == kind && x.name == from)
                    .ok_or_else(|| SchemaError::UnknownMember { class: id.clone(), kind, name: from })?;
                m.name = to;
            }
            MemberChange::RenameClass(new_name) => {
                let new_id = ClassId::versioned(new_name.clone(), id.version);
                if new_name.is_empty() || new_name.contains('@') || new_name.chars().any(char::is_whitespace) {
                    return Err(SchemaError::InvalidName(new_name));
                }
                if self.contains(&new_id) {
                    return Err(SchemaError::DuplicateName(new_id));
                }
                self.rename_references(id, &new_id);
                return Ok(new_id);
            }
        }
        Ok(id.clone())
    }

    fn rename_references(&mut self, old: &ClassId, new: &ClassId) {
        let swap = |x: &mut ClassId| {
            if x == old {
                *x = new.clone();
            }
        };
        let entries: Vec<(ClassId, Class)> = self.classes.drain(..).collect();
        for (mut key, mut class) in entries {
            swap(&mut key);
            swap(class.id_mut());
            match &mut class {
                Class::Graph(g) => g.nodes.iter_mut().chain(g.relations.iter_mut()).for_each(swap),
                Class::Node(n) => n.afferent.iter_mut().chain(n.efferent.iter_mut()).for_each(swap),
                Class::Relation(r) => r.source.iter_mut().chain(r.destination.iter_mut()).for_each(swap),
            }
            self.classes.insert(key, class);
        }
        let membership = std::mem::take(&mut self.membership);
        self.membership = membership
            .into_iter()
            .map(|(mut k, set)| {
                swap(&mut k);
                let set = set.into_iter().map(|mut g| {
                    swap(&mut g);
                    g
                });
                (k, set.collect())
            })
            .collect();
    }

    // ---- queries used by rule conditions -----------------------------------

    /// True iff the node has an incoming relation that is not exclusive.
    pub fn shared(&self, node: &ClassId) -> SchemaResult<bool> {
        let n = self.node(node)?;
        Ok(n.afferent.iter().any(|r| self.relation(r).is_ok_and(|r| !r.exclusive)))
    }

    /// The unique graph containing `id`.
    pub fn graph_of(&self, id: &ClassId) -> SchemaResult<ClassId> {
        if !self.contains(id) {
            return Err(SchemaError::UnknownClass(id.clone()));
        }
        let mut graphs = self.graphs_containing(id);
        match (graphs.next(), graphs.next()) {
            (Some(g), None) => Ok(g.clone()),
            (None, _) => Err(SchemaError::NotInAnyGraph(id.clone())),
            (Some(_), Some(_)) => Err(SchemaError::AmbiguousContainment(id.clone())),
        }
    }
}

fn wrong_kind(id: &ClassId, expected: ClassKind, found: ClassKind) -> SchemaError {
    SchemaError::WrongKind { id: id.clone(), expected, found }
}
