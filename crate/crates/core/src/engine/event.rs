use std::fmt;

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::id::{ClassId, ClassKind};
use crate::schema::{RelationDescriptor, Side};

/// A runtime value: event arguments, let-bindings and expression results.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Class(ClassId),
    Side(Side),
    Str(String),
    Int(i64),
    Bool(bool),
    List(Vec<Value>),
    Descriptor(Box<RelationDescriptor>),
}

impl Value {
    pub fn as_class(&self) -> Option<&ClassId> {
        match self {
            Value::Class(c) => Some(c),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Class(_) => "class",
            Value::Side(_) => "side",
            Value::Str(_) => "string",
            Value::Int(_) => "integer",
            Value::Bool(_) => "boolean",
            Value::List(_) => "list",
            Value::Descriptor(_) => "descriptor",
        }
    }

    /// Converts a JSON argument. Strings are interpreted by `resolve`.
    pub fn from_json(v: &serde_json::Value, resolve: &dyn Fn(&str) -> Value) -> Result<Value, String> {
        match v {
            serde_json::Value::String(s) => Ok(resolve(s)),
            serde_json::Value::Bool(b) => Ok(Value::Bool(*b)),
            serde_json::Value::Number(n) => n.as_i64().map(Value::Int).ok_or_else(|| format!("not an integer: {n}")),
            serde_json::Value::Array(items) => {
                items.iter().map(|i| Value::from_json(i, resolve)).collect::<Result<_, _>>().map(Value::List)
            }
            serde_json::Value::Object(_) => serde_json::from_value::<RelationDescriptor>(v.clone())
                .map(|d| Value::Descriptor(Box::new(d)))
                .map_err(|e| e.to_string()),
            serde_json::Value::Null => Err("null argument".into()),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Class(c) => s.collect_str(c),
            Value::Side(side) => s.serialize_str(side.as_str()),
            Value::Str(v) => s.serialize_str(v),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::List(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for i in items {
                    seq.serialize_element(i)?;
                }
                seq.end()
            }
            Value::Descriptor(d) => d.serialize(s),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Class(c) => write!(f, "{c}"),
            Value::Side(s) => write!(f, "{s}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Descriptor(d) => write!(f, "<{}>", d.nature),
        }
    }
}

/// An evolution message: its name, the class it is sent to, and the
/// remaining arguments. The whole triple is the duplicate-suppression key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Event {
    pub name: String,
    pub target: ClassId,
    pub args: Vec<Value>,
}

impl Event {
    pub fn new(name: impl Into<String>, target: impl Into<ClassId>, args: Vec<Value>) -> Self {
        Event { name: name.into(), target: target.into(), args }
    }

    /// All parameters in pattern order: the target first.
    pub fn params(&self) -> impl Iterator<Item = Value> + '_ {
        std::iter::once(Value::Class(self.target.clone())).chain(self.args.iter().cloned())
    }

    pub fn arity(&self) -> usize {
        1 + self.args.len()
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}", self.name, self.target)?;
        for a in &self.args {
            write!(f, ", {a}")?;
        }
        f.write_str(")")
    }
}

/// Signature of an event name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpec {
    pub name: String,
    pub arity: usize,
    /// Creation events target a class that does not exist yet; this is its kind.
    pub creates: Option<ClassKind>,
}

/// The canonical vocabulary, one spelling per concept.
pub const CANONICAL_EVENTS: &[(&str, usize, Option<ClassKind>)] = &[
    ("add-node", 2, Some(ClassKind::Node)),
    ("delete-node", 1, None),
    ("add-relation", 5, Some(ClassKind::Relation)),
    ("delete-relation", 1, None),
    ("modify-graph", 2, None),
    ("modify-node", 3, None),
    ("rename-class", 2, None),
    ("add-attribute", 3, None),
    ("delete-attribute", 2, None),
    ("rename-attribute", 3, None),
    ("add-method", 3, None),
    ("delete-method", 2, None),
    ("rename-method", 3, None),
    ("create-version-node", 1, None),
    ("create-version-relation", 3, None),
    ("create-version-graph", 2, None),
];

pub fn canonical_event(name: &str) -> Option<EventSpec> {
    CANONICAL_EVENTS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|&(n, arity, creates)| EventSpec { name: n.to_string(), arity, creates })
}
