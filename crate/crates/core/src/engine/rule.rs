use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;

use crate::id::{ClassId, ClassKind};
use crate::schema::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    /// Propagation admitted from the source extremity.
    #[default]
    Forward,
    /// Propagation admitted from the destination extremity.
    Backward,
    Bidirectional,
    None,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::Bidirectional => "bidirectional",
            Direction::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "forward" => Some(Direction::Forward),
            "backward" => Some(Direction::Backward),
            "bidirectional" | "bidirectionnel" => Some(Direction::Bidirectional),
            "none" => Some(Direction::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// The operation reaches the relation class only.
    #[default]
    Restricted,
    /// The operation also reaches the far extremity of the relation.
    Extended,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Restricted => "restricted",
            Mode::Extended => "extended",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "restricted" => Some(Mode::Restricted),
            "extended" => Some(Mode::Extended),
            _ => None,
        }
    }
}

/// Propagation properties carried by relation rules only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RelationOptions {
    pub direction: Direction,
    pub mode: Mode,
}

/// Where an event reached a relation from, relative to a rule's direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremity {
    Source,
    Destination,
    /// Self-loop: the trigger is both ends.
    Both,
}

impl RelationOptions {
    /// Whether a relation rule may fire for an event that reached the
    /// relation from `from`. Events sent to the relation directly (no
    /// extremity) are always admitted.
    pub fn admits(&self, from: Option<Extremity>) -> bool {
        let Some(from) = from else { return true };
        match self.direction {
            Direction::Forward => matches!(from, Extremity::Source | Extremity::Both),
            Direction::Backward => matches!(from, Extremity::Destination | Extremity::Both),
            Direction::Bidirectional => true,
            Direction::None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    /// When present, the argument must be a class of this kind for the
    /// rule to be selected.
    pub kind: Option<ClassKind>,
}

impl Param {
    pub fn new(name: impl Into<String>) -> Self {
        Param { name: name.into(), kind: None }
    }

    pub fn typed(name: impl Into<String>, kind: ClassKind) -> Self {
        Param { name: name.into(), kind: Some(kind) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventPattern {
    pub name: String,
    pub params: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Side(Side),
    Bool(bool),
    Int(i64),
    Str(String),
    List(Vec<Expr>),
    Call(String, Vec<Expr>),
    Field(Box<Expr>, String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Ne(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(name.to_string(), args)
    }
}

/// One step of a condition: a binding or a guard, evaluated in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CondStep {
    Let(String, Expr),
    When(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Call {
    pub name: String,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    /// Dispatch a new event; its subtree completes before the next action.
    Raise(Call),
    /// Invoke a raw primitive.
    Exec(Call),
    For { var: String, iter: Expr, body: Vec<Action> },
    If { cond: Expr, then: Vec<Action>, otherwise: Vec<Action> },
}

/// An event/condition/action rule attached to one class kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EvolutionRule {
    pub id: String,
    pub applies_to: ClassKind,
    /// Present iff `applies_to` is `Relation`.
    pub relation: Option<RelationOptions>,
    pub pattern: EventPattern,
    pub condition: Vec<CondStep>,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Creation,
    Destruction,
    Modification,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Creation, Category::Destruction, Category::Modification];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Creation => "creation",
            Category::Destruction => "destruction",
            Category::Modification => "modification",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Category::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named bundle of rules for one class kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PropagationStrategy {
    pub id: String,
    pub applies_to: ClassKind,
    pub creation: Vec<String>,
    pub destruction: Vec<String>,
    pub modification: Vec<String>,
}

impl PropagationStrategy {
    pub fn new(id: impl Into<String>, applies_to: ClassKind) -> Self {
        PropagationStrategy {
            id: id.into(),
            applies_to,
            creation: Vec::new(),
            destruction: Vec::new(),
            modification: Vec::new(),
        }
    }

    pub fn rules(&self, category: Category) -> &[String] {
        match category {
            Category::Creation => &self.creation,
            Category::Destruction => &self.destruction,
            Category::Modification => &self.modification,
        }
    }

    pub fn rules_mut(&mut self, category: Category) -> &mut Vec<String> {
        match category {
            Category::Creation => &mut self.creation,
            Category::Destruction => &mut self.destruction,
            Category::Modification => &mut self.modification,
        }
    }

    /// Every rule id in selection order: creation, destruction, modification.
    pub fn all_rules(&self) -> impl Iterator<Item = (Category, &String)> {
        Category::ALL.into_iter().flat_map(move |c| self.rules(c).iter().map(move |r| (c, r)))
    }

    pub fn category_of(&self, rule: &str) -> Option<Category> {
        self.all_rules().find(|(_, r)| r.as_str() == rule).map(|(c, _)| c)
    }
}

/// Which strategy governs which class: per-class bindings override the
/// default for the class's kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StrategyRegistry {
    pub per_class: IndexMap<ClassId, String>,
    pub per_kind: BTreeMap<ClassKind, String>,
}

impl StrategyRegistry {
    pub fn resolve(&self, class: &ClassId, kind: ClassKind) -> Option<&str> {
        self.per_class.get(class).or_else(|| self.per_kind.get(&kind)).map(String::as_str)
    }
}
