//! Graph, node and relation classes and the workspace that holds them.

mod validate;
mod workspace;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::id::{ClassId, ClassKind};

pub use validate::Violation;
pub use workspace::{MemberChange, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemberKind {
    Attribute,
    Method,
}

impl fmt::Display for MemberKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemberKind::Attribute => "attribute",
            MemberKind::Method => "method",
        })
    }
}

/// An attribute or method of a class. Signatures are free text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Member {
    pub member_kind: MemberKind,
    pub name: String,
    #[serde(default)]
    pub signature: String,
}

impl Member {
    pub fn attribute(name: impl Into<String>, signature: impl Into<String>) -> Self {
        Member { member_kind: MemberKind::Attribute, name: name.into(), signature: signature.into() }
    }

    pub fn method(name: impl Into<String>, signature: impl Into<String>) -> Self {
        Member { member_kind: MemberKind::Method, name: name.into(), signature: signature.into() }
    }
}

/// Which incident list of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Incoming relations (the node is their destination).
    Afferent,
    /// Outgoing relations (the node is their source).
    Efferent,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Afferent => "afferent",
            Side::Efferent => "efferent",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "afferent" => Some(Side::Afferent),
            "efferent" => Some(Side::Efferent),
            _ => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Semantic nature of a relation class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Nature {
    Composition,
    Inheritance,
    #[default]
    Association,
    Custom(String),
}

impl Nature {
    pub fn as_str(&self) -> &str {
        match self {
            Nature::Composition => "composition",
            Nature::Inheritance => "inheritance",
            Nature::Association => "association",
            Nature::Custom(s) => s,
        }
    }

    pub fn parse(s: &str) -> Nature {
        match s {
            "composition" => Nature::Composition,
            "inheritance" => Nature::Inheritance,
            "association" => Nature::Association,
            other => Nature::Custom(other.to_string()),
        }
    }
}

impl fmt::Display for Nature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Nature {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Nature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Nature::parse(&String::deserialize(deserializer)?))
    }
}

/// Cardinality spec: a fixed count or `n`. Stored uninterpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cardinality {
    Count(u32),
    Many,
}

impl Default for Cardinality {
    fn default() -> Self {
        Cardinality::Count(1)
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cardinality::Count(n) => write!(f, "{n}"),
            Cardinality::Many => f.write_str("n"),
        }
    }
}

impl Serialize for Cardinality {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Cardinality::Count(n) => serializer.serialize_u32(*n),
            Cardinality::Many => serializer.serialize_str("n"),
        }
    }
}

impl<'de> Deserialize<'de> for Cardinality {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u32),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Count(n) => Ok(Cardinality::Count(n)),
            Raw::Text(s) if s == "n" => Ok(Cardinality::Many),
            Raw::Text(s) => s
                .parse()
                .map(Cardinality::Count)
                .map_err(|_| serde::de::Error::custom(format!("invalid cardinality `{s}`"))),
        }
    }
}

/// Everything about a relation except its identity and endpoints.
///
/// Rules carry descriptors as event payloads, e.g. when a bridging relation
/// copies the shape of one that was just deleted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationDescriptor {
    pub nature: Nature,
    pub exclusive: bool,
    pub dependent: bool,
    pub predominant: bool,
    pub card: Cardinality,
    pub reverse_card: Cardinality,
    #[serde(default)]
    pub members: Vec<Member>,
}

impl Default for RelationDescriptor {
    fn default() -> Self {
        RelationDescriptor {
            nature: Nature::Association,
            exclusive: true,
            dependent: false,
            predominant: false,
            card: Cardinality::Count(1),
            reverse_card: Cardinality::Count(1),
            members: Vec::new(),
        }
    }
}

impl RelationDescriptor {
    pub fn with_nature(nature: Nature) -> Self {
        RelationDescriptor { nature, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeClass {
    pub id: ClassId,
    #[serde(default)]
    pub afferent: Vec<ClassId>,
    #[serde(default)]
    pub efferent: Vec<ClassId>,
    #[serde(default)]
    pub members: Vec<Member>,
    #[serde(default = "default_true")]
    pub versionable: bool,
}

fn default_true() -> bool {
    true
}

impl NodeClass {
    pub fn new(id: impl Into<ClassId>) -> Self {
        NodeClass {
            id: id.into(),
            afferent: Vec::new(),
            efferent: Vec::new(),
            members: Vec::new(),
            versionable: true,
        }
    }

    pub fn side(&self, side: Side) -> &[ClassId] {
        match side {
            Side::Afferent => &self.afferent,
            Side::Efferent => &self.efferent,
        }
    }

    pub(crate) fn side_mut(&mut self, side: Side) -> &mut Vec<ClassId> {
        match side {
            Side::Afferent => &mut self.afferent,
            Side::Efferent => &mut self.efferent,
        }
    }

    /// Afferent then efferent, without repeating self-loops.
    pub fn incident(&self) -> Vec<ClassId> {
        let mut out = self.afferent.clone();
        for r in &self.efferent {
            if !out.contains(r) {
                out.push(r.clone());
            }
        }
        out
    }

    pub fn is_isolated(&self) -> bool {
        self.afferent.is_empty() && self.efferent.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationClass {
    pub id: ClassId,
    pub nature: Nature,
    /// `None` only for a freshly derived version whose endpoints are not wired yet.
    pub source: Option<ClassId>,
    pub destination: Option<ClassId>,
    pub exclusive: bool,
    pub dependent: bool,
    pub predominant: bool,
    pub card: Cardinality,
    pub reverse_card: Cardinality,
    #[serde(default)]
    pub members: Vec<Member>,
}

impl RelationClass {
    pub fn new(
        id: impl Into<ClassId>,
        nature: Nature,
        source: impl Into<ClassId>,
        destination: impl Into<ClassId>,
    ) -> Self {
        RelationClass::from_descriptor(
            id.into(),
            RelationDescriptor::with_nature(nature),
            Some(source.into()),
            Some(destination.into()),
        )
    }

    pub fn from_descriptor(
        id: ClassId,
        d: RelationDescriptor,
        source: Option<ClassId>,
        destination: Option<ClassId>,
    ) -> Self {
        RelationClass {
            id,
            nature: d.nature,
            source,
            destination,
            exclusive: d.exclusive,
            dependent: d.dependent,
            predominant: d.predominant,
            card: d.card,
            reverse_card: d.reverse_card,
            members: d.members,
        }
    }

    pub fn exclusive(mut self, v: bool) -> Self {
        self.exclusive = v;
        self
    }

    pub fn descriptor(&self) -> RelationDescriptor {
        RelationDescriptor {
            nature: self.nature.clone(),
            exclusive: self.exclusive,
            dependent: self.dependent,
            predominant: self.predominant,
            card: self.card,
            reverse_card: self.reverse_card,
            members: self.members.clone(),
        }
    }

    pub fn endpoints(&self) -> impl Iterator<Item = &ClassId> {
        self.source.iter().chain(self.destination.iter())
    }

    pub fn is_self_loop(&self) -> bool {
        self.source.is_some() && self.source == self.destination
    }

    /// The endpoint opposite to `node`, if `node` is an endpoint at all.
    pub fn far_end(&self, node: &ClassId) -> Option<&ClassId> {
        if self.source.as_ref() == Some(node) {
            self.destination.as_ref()
        } else if self.destination.as_ref() == Some(node) {
            self.source.as_ref()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphClass {
    pub id: ClassId,
    #[serde(default)]
    pub nodes: Vec<ClassId>,
    #[serde(default)]
    pub relations: Vec<ClassId>,
    #[serde(default)]
    pub members: Vec<Member>,
}

impl GraphClass {
    pub fn new(id: impl Into<ClassId>) -> Self {
        GraphClass { id: id.into(), nodes: Vec::new(), relations: Vec::new(), members: Vec::new() }
    }

    pub fn contains(&self, id: &ClassId) -> bool {
        self.nodes.contains(id) || self.relations.contains(id)
    }
}

/// A class record of any kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Class {
    Graph(GraphClass),
    Node(NodeClass),
    Relation(RelationClass),
}

impl Class {
    pub fn id(&self) -> &ClassId {
        match self {
            Class::Graph(g) => &g.id,
            Class::Node(n) => &n.id,
            Class::Relation(r) => &r.id,
        }
    }

    pub(crate) fn id_mut(&mut self) -> &mut ClassId {
        match self {
            Class::Graph(g) => &mut g.id,
            Class::Node(n) => &mut n.id,
            Class::Relation(r) => &mut r.id,
        }
    }

    pub fn kind(&self) -> ClassKind {
        match self {
            Class::Graph(_) => ClassKind::Graph,
            Class::Node(_) => ClassKind::Node,
            Class::Relation(_) => ClassKind::Relation,
        }
    }

    pub fn members(&self) -> &[Member] {
        match self {
            Class::Graph(g) => &g.members,
            Class::Node(n) => &n.members,
            Class::Relation(r) => &r.members,
        }
    }

    pub(crate) fn members_mut(&mut self) -> &mut Vec<Member> {
        match self {
            Class::Graph(g) => &mut g.members,
            Class::Node(n) => &mut n.members,
            Class::Relation(r) => &mut r.members,
        }
    }

    pub fn as_node(&self) -> Option<&NodeClass> {
        match self {
            Class::Node(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_relation(&self) -> Option<&RelationClass> {
        match self {
            Class::Relation(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_graph(&self) -> Option<&GraphClass> {
        match self {
            Class::Graph(g) => Some(g),
            _ => None,
        }
    }
}
