//! Expression evaluation for rule conditions and action arguments.

use std::collections::HashMap;

use super::event::{Event, Value};
use super::rule::{Expr, Extremity, Mode};
use super::{EngineState, RuleSet};
use crate::error::SchemaError;
use crate::id::{ClassId, ClassKind};
use crate::schema::{Cardinality, Class, RelationClass, Side};

/// Built-in functions available in expressions, with their arity.
pub const BUILTINS: &[(&str, usize)] = &[
    ("belong", 2),
    ("shared", 1),
    ("versionable", 1),
    ("version-exists", 1),
    ("version", 1),
    ("version-or-self", 1),
    ("graph-of", 1),
    ("afferent", 1),
    ("efferent", 1),
    ("incident", 2),
    ("far", 2),
    ("count", 1),
    ("first", 1),
    ("last", 1),
    ("empty", 1),
    ("exists", 1),
    ("kind", 1),
    ("describe", 1),
    ("propagating", 2),
];

pub fn builtin_arity(name: &str) -> Option<usize> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|&(_, a)| a)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("`{name}` expects {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("expected {expected}, found {found}")]
    Type { expected: &'static str, found: String },
    #[error("no field `{field}` on {on}")]
    NoField { field: String, on: String },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

impl EvalError {
    /// Mistakes in the rule text itself, as opposed to the data it ran on.
    pub fn is_authoring(&self) -> bool {
        matches!(self, EvalError::UnboundVariable(_) | EvalError::UnknownBuiltin(_) | EvalError::Arity { .. })
    }
}

pub type EvalResult<T> = Result<T, EvalError>;

/// Variable bindings, innermost last.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    vars: Vec<(String, Value)>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn push(&mut self, name: impl Into<String>, value: Value) {
        self.vars.push((name.into(), value));
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.vars.truncate(len);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.vars.iter().map(|(n, v)| (n.as_str(), v))
    }
}

/// Read-only view used while evaluating: the live state, the rule set,
/// and classes deleted earlier in the current propagation.
pub struct Context<'a> {
    pub state: &'a EngineState,
    pub rules: &'a RuleSet,
    pub graveyard: &'a HashMap<ClassId, Class>,
}

pub fn class_arg(v: &Value) -> EvalResult<&ClassId> {
    v.as_class().ok_or_else(|| type_err("class", v))
}

pub fn side_arg(v: &Value) -> EvalResult<Side> {
    match v {
        Value::Side(s) => Ok(*s),
        Value::Str(s) | Value::Class(ClassId { name: s, version: 0 }) => {
            Side::parse(s).ok_or_else(|| type_err("side", v))
        }
        _ => Err(type_err("side", v)),
    }
}

/// Text of a name argument: strings as-is, bare identifiers by their id.
pub fn text_arg(v: &Value) -> EvalResult<String> {
    match v {
        Value::Str(s) => Ok(s.clone()),
        Value::Class(c) => Ok(c.to_string()),
        _ => Err(type_err("name", v)),
    }
}

fn list_arg(v: &Value) -> EvalResult<&[Value]> {
    match v {
        Value::List(items) => Ok(items),
        _ => Err(type_err("list", v)),
    }
}

fn type_err(expected: &'static str, v: &Value) -> EvalError {
    EvalError::Type { expected, found: format!("{} `{v}`", v.type_name()) }
}

fn class_list(ids: &[ClassId]) -> Value {
    Value::List(ids.iter().cloned().map(Value::Class).collect())
}

fn card_value(c: Cardinality) -> Value {
    match c {
        Cardinality::Count(n) => Value::Int(n as i64),
        Cardinality::Many => Value::Str("n".into()),
    }
}

impl<'a> Context<'a> {
    /// A live class, or one deleted earlier in this propagation.
    pub fn lookup(&self, id: &ClassId) -> Option<&'a Class> {
        self.state.workspace.get(id).or_else(|| self.graveyard.get(id))
    }

    pub fn kind_of(&self, id: &ClassId) -> Option<ClassKind> {
        self.lookup(id).map(Class::kind)
    }

    fn class(&self, id: &ClassId) -> EvalResult<&'a Class> {
        self.lookup(id).ok_or_else(|| SchemaError::UnknownClass(id.clone()).into())
    }

    fn node(&self, v: &Value) -> EvalResult<&'a crate::schema::NodeClass> {
        let id = class_arg(v)?;
        self.class(id)?.as_node().ok_or_else(|| type_err("node", v))
    }

    fn relation(&self, v: &Value) -> EvalResult<&'a RelationClass> {
        let id = class_arg(v)?;
        self.class(id)?.as_relation().ok_or_else(|| type_err("relation", v))
    }

    pub fn eval(&self, expr: &Expr, env: &Env) -> EvalResult<Value> {
        match expr {
            Expr::Var(name) => env.get(name).cloned().ok_or_else(|| EvalError::UnboundVariable(name.clone())),
            Expr::Side(s) => Ok(Value::Side(*s)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Int(i) => Ok(Value::Int(*i)),
            Expr::Str(s) => Ok(Value::Str(s.clone())),
            Expr::List(items) => items.iter().map(|e| self.eval(e, env)).collect::<EvalResult<_>>().map(Value::List),
            Expr::Call(name, args) => {
                let values = args.iter().map(|e| self.eval(e, env)).collect::<EvalResult<Vec<_>>>()?;
                self.call(name, &values)
            }
            Expr::Field(base, field) => {
                let v = self.eval(base, env)?;
                self.field(&v, field)
            }
            Expr::Not(e) => Ok(Value::Bool(!self.truthy(e, env)?)),
            Expr::And(a, b) => Ok(Value::Bool(self.truthy(a, env)? && self.truthy(b, env)?)),
            Expr::Or(a, b) => Ok(Value::Bool(self.truthy(a, env)? || self.truthy(b, env)?)),
            Expr::Eq(a, b) => Ok(Value::Bool(self.eval(a, env)? == self.eval(b, env)?)),
            Expr::Ne(a, b) => Ok(Value::Bool(self.eval(a, env)? != self.eval(b, env)?)),
        }
    }

    pub fn truthy(&self, expr: &Expr, env: &Env) -> EvalResult<bool> {
        match self.eval(expr, env)? {
            Value::Bool(b) => Ok(b),
            other => Err(type_err("boolean", &other)),
        }
    }

    pub fn call(&self, name: &str, args: &[Value]) -> EvalResult<Value> {
        let expected = builtin_arity(name).ok_or_else(|| EvalError::UnknownBuiltin(name.to_string()))?;
        if args.len() != expected {
            return Err(EvalError::Arity { name: name.to_string(), expected, found: args.len() });
        }
        let ws = &self.state.workspace;
        let versions = &self.state.versions;
        let a = &args[0];
        Ok(match name {
            "belong" => {
                let x = class_arg(a)?;
                match &args[1] {
                    Value::List(items) => Value::Bool(items.iter().any(|i| i.as_class() == Some(x))),
                    g => {
                        let gid = class_arg(g)?;
                        Value::Bool(ws.graph(gid)?.contains(x))
                    }
                }
            }
            "shared" => Value::Bool(ws.shared(class_arg(a)?)?),
            "versionable" => Value::Bool(self.node(a)?.versionable),
            "version-exists" => Value::Bool(versions.current_bindings().contains_key(class_arg(a)?)),
            "version" => {
                let id = class_arg(a)?;
                let v = versions.current_bindings().get(id);
                Value::Class(v.cloned().ok_or_else(|| EvalError::Domain(format!("no version of {id} in this propagation")))?)
            }
            "version-or-self" => {
                let id = class_arg(a)?;
                Value::Class(versions.current_bindings().get(id).unwrap_or(id).clone())
            }
            "graph-of" => Value::Class(ws.graph_of(class_arg(a)?)?),
            "afferent" => class_list(&self.node(a)?.afferent),
            "efferent" => class_list(&self.node(a)?.efferent),
            "incident" => class_list(self.node(a)?.side(side_arg(&args[1])?)),
            "far" => {
                let node = class_arg(&args[1])?;
                let r = self.relation(a)?;
                let far = r.far_end(node).ok_or_else(|| EvalError::Domain(format!("{node} is not an end of {}", r.id)))?;
                Value::Class(far.clone())
            }
            "count" => Value::Int(list_arg(a)?.len() as i64),
            "first" => list_arg(a)?.first().cloned().ok_or_else(|| EvalError::Domain("first of empty list".into()))?,
            "last" => list_arg(a)?.last().cloned().ok_or_else(|| EvalError::Domain("last of empty list".into()))?,
            "empty" => Value::Bool(list_arg(a)?.is_empty()),
            "exists" => Value::Bool(ws.contains(class_arg(a)?)),
            "kind" => Value::Str(self.class(class_arg(a)?)?.kind().as_str().to_string()),
            "describe" => Value::Descriptor(Box::new(self.relation(a)?.descriptor())),
            "propagating" => {
                let event = text_arg(&args[1])?;
                class_list(&self.propagating(class_arg(a)?, &event)?)
            }
            _ => unreachable!("builtin table and dispatch agree"),
        })
    }

    pub fn field(&self, v: &Value, field: &str) -> EvalResult<Value> {
        let no_field = || EvalError::NoField { field: field.to_string(), on: v.to_string() };
        if let Value::Descriptor(d) = v {
            return Ok(match field {
                "nature" => Value::Str(d.nature.to_string()),
                "exclusive" => Value::Bool(d.exclusive),
                "dependent" => Value::Bool(d.dependent),
                "predominant" => Value::Bool(d.predominant),
                "card" => card_value(d.card),
                "reverse-card" => card_value(d.reverse_card),
                _ => return Err(no_field()),
            });
        }
        let id = class_arg(v)?;
        match field {
            "name" => return Ok(Value::Str(id.name.clone())),
            "version" => return Ok(Value::Int(id.version as i64)),
            _ => {}
        }
        let class = self.class(id)?;
        Ok(match (class, field) {
            (_, "kind") => Value::Str(class.kind().as_str().to_string()),
            (_, "members") => Value::List(class.members().iter().map(|m| Value::Str(m.name.clone())).collect()),
            (Class::Relation(r), "source" | "destination") => {
                let end = if field == "source" { &r.source } else { &r.destination };
                Value::Class(end.clone().ok_or_else(|| EvalError::Domain(format!("{} has no {field}", r.id)))?)
            }
            (Class::Relation(r), "nature") => Value::Str(r.nature.to_string()),
            (Class::Relation(r), "exclusive") => Value::Bool(r.exclusive),
            (Class::Relation(r), "dependent") => Value::Bool(r.dependent),
            (Class::Relation(r), "predominant") => Value::Bool(r.predominant),
            (Class::Relation(r), "card") => card_value(r.card),
            (Class::Relation(r), "reverse-card") => card_value(r.reverse_card),
            (Class::Node(n), "afferent") => class_list(&n.afferent),
            (Class::Node(n), "efferent") => class_list(&n.efferent),
            (Class::Node(n), "versionable") => Value::Bool(n.versionable),
            (Class::Graph(g), "nodes") => class_list(&g.nodes),
            (Class::Graph(g), "relations") => class_list(&g.relations),
            _ => return Err(no_field()),
        })
    }

    /// Relations incident to `node` whose governing rule for `event` admits
    /// propagation from the node's side and reaches the far extremity.
    pub fn propagating(&self, node: &ClassId, event: &str) -> EvalResult<Vec<ClassId>> {
        let n = self.node(&Value::Class(node.clone()))?;
        let mut out = Vec::new();
        for rid in n.incident() {
            let Some(Class::Relation(r)) = self.lookup(&rid) else { continue };
            let Some(from) = extremity_of(r, node) else { continue };
            let Some(strategy) = self.state.registry.resolve(&rid, ClassKind::Relation) else { continue };
            let admitted = self.rules.rules_of(strategy).any(|rule| {
                rule.pattern.name == event
                    && rule.relation.is_some_and(|o| o.mode == Mode::Extended && o.admits(Some(from)))
            });
            if admitted {
                out.push(rid);
            }
        }
        Ok(out)
    }

    /// Which end of the target relation an event came from: the first
    /// argument that is one of its endpoints. `None` when the event was sent
    /// to the relation directly, or creates it.
    pub fn extremity(&self, event: &Event) -> Option<Extremity> {
        let Some(Class::Relation(r)) = self.lookup(&event.target) else { return None };
        let creating = self.rules.event_spec(&event.name).is_some_and(|s| s.creates.is_some());
        if creating && !self.state.workspace.contains(&event.target) {
            return None;
        }
        event.args.iter().filter_map(Value::as_class).find_map(|c| extremity_of(r, c))
    }
}

pub fn extremity_of(r: &RelationClass, node: &ClassId) -> Option<Extremity> {
    match (r.source.as_ref() == Some(node), r.destination.as_ref() == Some(node)) {
        (true, true) => Some(Extremity::Both),
        (true, false) => Some(Extremity::Source),
        (false, true) => Some(Extremity::Destination),
        (false, false) => None,
    }
}
