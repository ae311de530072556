//! Class identities.
//!
//! A class is identified by its name and a version number. Version 0 is the
//! original class; version `k` is the `k`-th derived version of that name.
//! The serialized form is `name` for originals and `name@vK` otherwise. The
//! display form follows the workbench convention: `VC1` for the first
//! version of `C1`, `V2C1` for the second.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The three reified class kinds of a graph class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Graph,
    Node,
    Relation,
}

impl ClassKind {
    pub const ALL: [ClassKind; 3] = [ClassKind::Graph, ClassKind::Node, ClassKind::Relation];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassKind::Graph => "graph",
            ClassKind::Node => "node",
            ClassKind::Relation => "relation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "graph" => Some(ClassKind::Graph),
            "node" => Some(ClassKind::Node),
            "relation" => Some(ClassKind::Relation),
            _ => None,
        }
    }
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identity of a class inside a workspace: `(name, version)`.
///
/// The kind is a property of the stored class record rather than part of the
/// key, so that event expressions such as `delete-node(C2)` can name a class
/// without restating its kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId {
    pub name: String,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid class id `{0}`")]
pub struct ParseClassIdError(pub String);

impl ClassId {
    pub fn new(name: impl Into<String>) -> Self {
        ClassId { name: name.into(), version: 0 }
    }

    pub fn versioned(name: impl Into<String>, version: u32) -> Self {
        ClassId { name: name.into(), version }
    }

    pub fn is_original(&self) -> bool {
        self.version == 0
    }

    /// Same name, next version number.
    pub fn next_version(&self) -> ClassId {
        ClassId::versioned(self.name.clone(), self.version + 1)
    }

    /// Workbench rendering: `C1`, `VC1`, `V2C1`, ...
    pub fn display_name(&self) -> String {
        match self.version {
            0 => self.name.clone(),
            1 => format!("V{}", self.name),
            k => format!("V{k}{}", self.name),
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.version == 0 {
            f.write_str(&self.name)
        } else {
            write!(f, "{}@v{}", self.name, self.version)
        }
    }
}

impl FromStr for ClassId {
    type Err = ParseClassIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseClassIdError(s.to_string());
        let (name, version) = match s.rsplit_once("@v") {
            Some((name, digits)) => {
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(err());
                }
                (name, digits.parse::<u32>().map_err(|_| err())?)
            }
            None => (s, 0),
        };
        if name.is_empty() || name.contains('@') || name.chars().any(char::is_whitespace) {
            return Err(err());
        }
        Ok(ClassId::versioned(name, version))
    }
}

impl From<&str> for ClassId {
    /// Panics on malformed input; intended for literals in code and tests.
    fn from(s: &str) -> Self {
        s.parse().unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Serialize for ClassId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClassId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
