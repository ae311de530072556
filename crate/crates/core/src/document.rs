//! Serialized workspaces: the JSON interchange document and the full DSL form.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dsl::{self, BindTargets, Diagnostic, GraphDecl, Item, Model, NodeDecl, RelationDecl, RuleDocument};
use crate::engine::{EngineState, RuleSet, StrategyRegistry};
use crate::id::ClassId;
use crate::schema::{GraphClass, NodeClass, RelationClass, Workspace};
use crate::versioning::LineageEdge;

/// JSON form of a workspace with its rules. Rules and strategies are kept as
/// DSL text so the document stays editable by hand.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorkspaceDocument {
    #[serde(default)]
    pub graphs: Vec<GraphClass>,
    #[serde(default)]
    pub nodes: Vec<NodeClass>,
    #[serde(default)]
    pub relations: Vec<RelationClass>,
    /// Strategy declarations and `bind` statements.
    #[serde(default)]
    pub strategies: String,
    /// Event declarations and rules.
    #[serde(default)]
    pub rules: String,
    #[serde(default)]
    pub lineage: Vec<LineageEdge>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("invalid JSON document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{}", render_diagnostics(.0))]
    Diagnostics(Vec<Diagnostic>),
}

pub fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

impl WorkspaceDocument {
    pub fn from_state(state: &EngineState, rules: &RuleSet) -> Self {
        let ws = &state.workspace;
        WorkspaceDocument {
            graphs: ws.graphs().cloned().collect(),
            nodes: ws.nodes().cloned().collect(),
            relations: ws.relations().cloned().collect(),
            strategies: dsl::print_document(&strategies_document(rules, &state.registry)),
            rules: dsl::print_document(&rules_document(rules)),
            lineage: state.versions.lineage().to_vec(),
        }
    }

    /// Loads the document. Node incident lists are kept in their stored
    /// order when they agree with the relation endpoints.
    pub fn into_model(self) -> Result<Model, LoadError> {
        let mut doc = RuleDocument::default();
        for n in &self.nodes {
            doc.push(Item::Node(NodeDecl { id: n.id.clone(), versionable: n.versionable, members: n.members.clone() }));
        }
        for r in &self.relations {
            let (Some(source), Some(destination)) = (r.source.clone(), r.destination.clone()) else {
                let msg = format!("relation `{}` has no endpoints", r.id);
                return Err(LoadError::Diagnostics(vec![Diagnostic::new(
                    Default::default(),
                    dsl::DiagnosticKind::Invalid,
                    msg,
                )]));
            };
            doc.push(Item::Relation(RelationDecl { id: r.id.clone(), source, destination, descriptor: r.descriptor() }));
        }
        for g in &self.graphs {
            doc.push(Item::Graph(GraphDecl {
                id: g.id.clone(),
                nodes: g.nodes.clone(),
                relations: g.relations.clone(),
                members: g.members.clone(),
            }));
        }
        for e in &self.lineage {
            doc.push(Item::Lineage { parent: e.parent.clone(), child: e.child.clone() });
        }
        for text in [&self.rules, &self.strategies] {
            doc.extend(dsl::parse_document(text).map_err(LoadError::Diagnostics)?);
        }
        let mut model = dsl::load(&doc).map_err(LoadError::Diagnostics)?;
        for n in self.nodes {
            let node = model.state.workspace.node_mut(&n.id).expect("loaded node");
            if same_set(&node.afferent, &n.afferent) && same_set(&node.efferent, &n.efferent) {
                node.afferent = n.afferent;
                node.efferent = n.efferent;
            }
        }
        Ok(model)
    }
}

fn same_set(a: &[ClassId], b: &[ClassId]) -> bool {
    a.len() == b.len() && a.iter().collect::<BTreeSet<_>>() == b.iter().collect::<BTreeSet<_>>()
}

/// Event declarations and rules, in declaration order.
pub fn rules_document(rules: &RuleSet) -> RuleDocument {
    let mut doc = RuleDocument::default();
    for (name, spec) in &rules.events {
        let params = (1..=spec.arity).map(|i| format!("X{i}")).collect();
        doc.push(Item::Event { name: name.clone(), params });
    }
    for r in rules.rules.values() {
        doc.push(Item::Rule(r.clone()));
    }
    doc
}

/// Strategies followed by their bindings.
pub fn strategies_document(rules: &RuleSet, registry: &StrategyRegistry) -> RuleDocument {
    let mut doc = RuleDocument::default();
    for s in rules.strategies.values() {
        doc.push(Item::Strategy(s.clone()));
    }
    for (kind, s) in &registry.per_kind {
        doc.push(Item::Bind { strategy: s.clone(), targets: BindTargets::Kind(*kind) });
    }
    // One statement per strategy, classes in binding order.
    let mut grouped: Vec<(&String, Vec<ClassId>)> = Vec::new();
    for (id, s) in &registry.per_class {
        match grouped.iter_mut().find(|(g, _)| *g == s) {
            Some((_, ids)) => ids.push(id.clone()),
            None => grouped.push((s, vec![id.clone()])),
        }
    }
    for (s, ids) in grouped {
        doc.push(Item::Bind { strategy: s.clone(), targets: BindTargets::Classes(ids) });
    }
    doc
}

/// The whole state as one DSL document: classes, lineage, rules, strategies.
pub fn state_document(state: &EngineState, rules: &RuleSet) -> RuleDocument {
    let ws = &state.workspace;
    let mut doc = rules_document(rules);
    for n in ws.nodes() {
        doc.push(Item::Node(NodeDecl { id: n.id.clone(), versionable: n.versionable, members: n.members.clone() }));
    }
    for r in ws.relations() {
        if let (Some(source), Some(destination)) = (r.source.clone(), r.destination.clone()) {
            doc.push(Item::Relation(RelationDecl { id: r.id.clone(), source, destination, descriptor: r.descriptor() }));
        }
    }
    for g in ws.graphs() {
        doc.push(Item::Graph(GraphDecl {
            id: g.id.clone(),
            nodes: g.nodes.clone(),
            relations: g.relations.clone(),
            members: g.members.clone(),
        }));
    }
    for e in state.versions.lineage() {
        doc.push(Item::Lineage { parent: e.parent.clone(), child: e.child.clone() });
    }
    doc.extend(strategies_document(rules, &state.registry));
    doc
}

/// Loads either a JSON document or DSL text.
pub fn load_text(text: &str) -> Result<Model, LoadError> {
    if text.trim_start().starts_with('{') {
        let doc: WorkspaceDocument = serde_json::from_str(text)?;
        doc.into_model()
    } else {
        let doc = dsl::parse_document(text).map_err(LoadError::Diagnostics)?;
        dsl::load(&doc).map_err(LoadError::Diagnostics)
    }
}

/// Class ids created, removed and modified between two workspaces.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct WorkspaceDiff {
    pub created: Vec<ClassId>,
    pub removed: Vec<ClassId>,
    pub changed: Vec<ClassId>,
}

impl WorkspaceDiff {
    pub fn is_empty(&self) -> bool {
        self.created.is_empty() && self.removed.is_empty() && self.changed.is_empty()
    }
}

pub fn diff(before: &Workspace, after: &Workspace) -> WorkspaceDiff {
    let mut d = WorkspaceDiff::default();
    for c in after.classes() {
        match before.get(c.id()) {
            None => d.created.push(c.id().clone()),
            Some(old) if old != c => d.changed.push(c.id().clone()),
            Some(_) => {}
        }
    }
    d.removed = before.classes().map(|c| c.id().clone()).filter(|id| !after.contains(id)).collect();
    d
}
