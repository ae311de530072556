use std::fmt;

use serde::Serialize;

use crate::engine::{EvolutionRule, PropagationStrategy};
use crate::id::{ClassId, ClassKind};
use crate::schema::{Member, RelationDescriptor};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDecl {
    pub id: ClassId,
    pub versionable: bool,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDecl {
    pub id: ClassId,
    pub source: ClassId,
    pub destination: ClassId,
    pub descriptor: RelationDescriptor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDecl {
    pub id: ClassId,
    pub nodes: Vec<ClassId>,
    pub relations: Vec<ClassId>,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BindTargets {
    Classes(Vec<ClassId>),
    Kind(ClassKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Event { name: String, params: Vec<String> },
    Node(NodeDecl),
    Relation(RelationDecl),
    Graph(GraphDecl),
    Rule(EvolutionRule),
    Strategy(PropagationStrategy),
    Bind { strategy: String, targets: BindTargets },
    Lineage { parent: ClassId, child: ClassId },
}

impl Item {
    pub(crate) fn is_class(&self) -> bool {
        matches!(self, Item::Node(_) | Item::Relation(_) | Item::Graph(_) | Item::Lineage { .. })
    }
}

/// A parsed `.gevo` document. Equality ignores source positions.
#[derive(Debug, Clone, Default)]
pub struct RuleDocument {
    pub items: Vec<Item>,
    /// Start position of each item, parallel to `items`.
    pub positions: Vec<Pos>,
}

impl RuleDocument {
    pub fn new(items: Vec<Item>) -> Self {
        let positions = vec![Pos::default(); items.len()];
        RuleDocument { items, positions }
    }

    pub fn push(&mut self, item: Item) {
        self.items.push(item);
        self.positions.push(Pos::default());
    }

    pub fn extend(&mut self, other: RuleDocument) {
        self.items.extend(other.items);
        self.positions.extend(other.positions);
    }

    pub fn position(&self, index: usize) -> Pos {
        self.positions.get(index).copied().unwrap_or_default()
    }

    pub fn rules(&self) -> impl Iterator<Item = &EvolutionRule> {
        self.items.iter().filter_map(|i| match i {
            Item::Rule(r) => Some(r),
            _ => None,
        })
    }

    pub fn strategies(&self) -> impl Iterator<Item = &PropagationStrategy> {
        self.items.iter().filter_map(|i| match i {
            Item::Strategy(s) => Some(s),
            _ => None,
        })
    }
}

impl PartialEq for RuleDocument {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl Eq for RuleDocument {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    SyntaxError,
    UnresolvedReference,
    DuplicateDefinition,
    KindMismatch,
    Invalid,
}

impl DiagnosticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticKind::SyntaxError => "syntax error",
            DiagnosticKind::UnresolvedReference => "unresolved reference",
            DiagnosticKind::DuplicateDefinition => "duplicate definition",
            DiagnosticKind::KindMismatch => "kind mismatch",
            DiagnosticKind::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    pub fn new(pos: Pos, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic { line: pos.line, col: pos.col, kind, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.col, self.kind.as_str(), self.message)
    }
}
