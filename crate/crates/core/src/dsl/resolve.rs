//! Name resolution and static checks of parsed documents.

use std::collections::{BTreeMap, HashMap, HashSet};

use indexmap::IndexMap;

use super::ast::{BindTargets, Diagnostic, DiagnosticKind, Item, Pos, RuleDocument};
use crate::engine::eval::builtin_arity;
use crate::engine::primitive::primitive_arity;
use crate::engine::{
    canonical_event, Action, CondStep, EngineState, EventSpec, EvolutionRule, Expr, PropagationStrategy, RuleSet,
    StrategyRegistry,
};
use crate::id::{ClassId, ClassKind};
use crate::schema::{Class, GraphClass, NodeClass, RelationClass, Workspace};
use crate::versioning::{LineageEdge, VersionRegistry};

/// A loaded document: the initial engine state and its rules.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub state: EngineState,
    pub rules: RuleSet,
}

impl Model {
    pub fn into_engine(self) -> crate::engine::Engine {
        crate::engine::Engine::new(self.state, self.rules)
    }
}

struct Diags(Vec<Diagnostic>);

impl Diags {
    fn push(&mut self, pos: Pos, kind: DiagnosticKind, msg: impl Into<String>) {
        self.0.push(Diagnostic::new(pos, kind, msg));
    }

    fn finish<T>(self, value: T) -> Result<T, Vec<Diagnostic>> {
        if self.0.is_empty() {
            Ok(value)
        } else {
            Err(self.0)
        }
    }
}

/// Builds the workspace, lineage, rules and bindings described by `doc`.
pub fn load(doc: &RuleDocument) -> Result<Model, Vec<Diagnostic>> {
    let mut diags = Diags(Vec::new());
    let (workspace, versions) = build_workspace(doc, &mut diags);
    if !diags.0.is_empty() {
        return Err(diags.0);
    }
    let (rules, registry) = check_rules(doc, &workspace, &mut diags);
    diags.finish(Model { state: EngineState { workspace, versions, registry }, rules })
}

/// Resolves a rules-only document against an existing workspace.
pub fn resolve_rules(doc: &RuleDocument, ws: &Workspace) -> Result<(RuleSet, StrategyRegistry), Vec<Diagnostic>> {
    let mut diags = Diags(Vec::new());
    for (i, item) in doc.items.iter().enumerate() {
        if item.is_class() {
            diags.push(doc.position(i), DiagnosticKind::Invalid, "class declarations are not allowed in a rule set");
        }
    }
    let out = check_rules(doc, ws, &mut diags);
    diags.finish(out)
}

fn build_workspace(doc: &RuleDocument, diags: &mut Diags) -> (Workspace, VersionRegistry) {
    let mut kinds: HashMap<&ClassId, ClassKind> = HashMap::new();
    for (i, item) in doc.items.iter().enumerate() {
        let (id, kind) = match item {
            Item::Node(n) => (&n.id, ClassKind::Node),
            Item::Relation(r) => (&r.id, ClassKind::Relation),
            Item::Graph(g) => (&g.id, ClassKind::Graph),
            _ => continue,
        };
        if kinds.insert(id, kind).is_some() {
            diags.push(doc.position(i), DiagnosticKind::DuplicateDefinition, format!("class `{id}` is defined twice"));
        }
    }

    let check = |diags: &mut Diags, pos: Pos, id: &ClassId, expected: ClassKind, what: &str| match kinds.get(id) {
        None => {
            diags.push(pos, DiagnosticKind::UnresolvedReference, format!("{what} `{id}` is not declared"));
            false
        }
        Some(&k) if k != expected => {
            diags.push(pos, DiagnosticKind::KindMismatch, format!("{what} `{id}` is a {k}, expected a {expected}"));
            false
        }
        Some(_) => true,
    };

    let mut nodes: HashMap<ClassId, NodeClass> = HashMap::new();
    for item in &doc.items {
        if let Item::Node(n) = item {
            let mut node = NodeClass::new(n.id.clone());
            node.versionable = n.versionable;
            node.members = n.members.clone();
            nodes.entry(n.id.clone()).or_insert(node);
        }
    }
    let mut lineage = Vec::new();
    for (i, item) in doc.items.iter().enumerate() {
        let pos = doc.position(i);
        match item {
            Item::Relation(r) => {
                let src_ok = check(diags, pos, &r.source, ClassKind::Node, "endpoint");
                let dst_ok = check(diags, pos, &r.destination, ClassKind::Node, "endpoint");
                if src_ok && dst_ok {
                    nodes.get_mut(&r.source).unwrap().efferent.push(r.id.clone());
                    nodes.get_mut(&r.destination).unwrap().afferent.push(r.id.clone());
                }
            }
            Item::Graph(g) => {
                for n in &g.nodes {
                    check(diags, pos, n, ClassKind::Node, "node");
                }
                for r in &g.relations {
                    check(diags, pos, r, ClassKind::Relation, "relation");
                }
            }
            Item::Lineage { parent, child } => {
                let known = [parent, child].into_iter().all(|id| {
                    let ok = kinds.contains_key(id);
                    if !ok {
                        diags.push(pos, DiagnosticKind::UnresolvedReference, format!("class `{id}` is not declared"));
                    }
                    ok
                });
                if known && (parent.name != child.name || child.version != parent.version + 1) {
                    diags.push(pos, DiagnosticKind::Invalid, format!("`{child}` is not the next version of `{parent}`"));
                } else if known {
                    lineage.push(LineageEdge { parent: parent.clone(), child: child.clone() });
                }
            }
            _ => {}
        }
    }

    let mut ws = Workspace::new();
    for (i, item) in doc.items.iter().enumerate() {
        let class = match item {
            Item::Node(n) => match nodes.remove(&n.id) {
                Some(node) => Class::Node(node),
                None => continue,
            },
            Item::Relation(r) => Class::Relation(RelationClass::from_descriptor(
                r.id.clone(),
                r.descriptor.clone(),
                Some(r.source.clone()),
                Some(r.destination.clone()),
            )),
            Item::Graph(g) => Class::Graph(GraphClass {
                id: g.id.clone(),
                nodes: g.nodes.clone(),
                relations: g.relations.clone(),
                members: g.members.clone(),
            }),
            _ => continue,
        };
        if let Err(e) = ws.insert_class(class) {
            // Duplicates were already reported above.
            if diags.0.is_empty() {
                diags.push(doc.position(i), DiagnosticKind::Invalid, e.to_string());
            }
        }
    }
    let versions = VersionRegistry::from_lineage(lineage);
    if diags.0.is_empty() && !versions.lineage_is_well_formed() {
        diags.push(Pos::default(), DiagnosticKind::Invalid, "lineage is not a set of linear version chains");
    }
    (ws, versions)
}

fn check_rules(doc: &RuleDocument, ws: &Workspace, diags: &mut Diags) -> (RuleSet, StrategyRegistry) {
    let mut set = RuleSet::default();
    let mut rule_pos: BTreeMap<&str, Pos> = BTreeMap::new();

    // Definitions first, so references may point forward.
    for (i, item) in doc.items.iter().enumerate() {
        let pos = doc.position(i);
        match item {
            Item::Event { name, params } => {
                if canonical_event(name).is_some() || set.events.contains_key(name) {
                    diags.push(pos, DiagnosticKind::DuplicateDefinition, format!("event `{name}` is already defined"));
                } else {
                    set.events.insert(name.clone(), EventSpec { name: name.clone(), arity: params.len(), creates: None });
                }
            }
            Item::Rule(r) => {
                if set.rules.contains_key(&r.id) {
                    diags.push(pos, DiagnosticKind::DuplicateDefinition, format!("rule `{}` is defined twice", r.id));
                } else {
                    rule_pos.insert(&r.id, pos);
                    set.rules.insert(r.id.clone(), r.clone());
                }
            }
            Item::Strategy(s) => {
                if set.strategies.contains_key(&s.id) {
                    diags.push(pos, DiagnosticKind::DuplicateDefinition, format!("strategy `{}` is defined twice", s.id));
                } else {
                    set.strategies.insert(s.id.clone(), s.clone());
                }
            }
            _ => {}
        }
    }

    for (id, rule) in &set.rules {
        check_rule(rule, &set, rule_pos[id.as_str()], diags);
    }

    for (i, item) in doc.items.iter().enumerate() {
        if let Item::Strategy(s) = item {
            check_strategy(s, &set.rules, doc.position(i), diags);
        }
    }

    let mut registry = StrategyRegistry::default();
    for (i, item) in doc.items.iter().enumerate() {
        let Item::Bind { strategy, targets } = item else { continue };
        let pos = doc.position(i);
        let Some(s) = set.strategies.get(strategy) else {
            diags.push(pos, DiagnosticKind::UnresolvedReference, format!("strategy `{strategy}` is not defined"));
            continue;
        };
        match targets {
            BindTargets::Kind(k) => {
                if s.applies_to != *k {
                    diags.push(
                        pos,
                        DiagnosticKind::KindMismatch,
                        format!("strategy `{strategy}` applies to {}, not {k}", s.applies_to),
                    );
                }
                registry.per_kind.insert(*k, strategy.clone());
            }
            BindTargets::Classes(ids) => {
                for id in ids {
                    match ws.kind_of(id) {
                        None => diags.push(pos, DiagnosticKind::UnresolvedReference, format!("class `{id}` is not declared")),
                        Some(k) if k != s.applies_to => diags.push(
                            pos,
                            DiagnosticKind::KindMismatch,
                            format!("strategy `{strategy}` applies to {}, but `{id}` is a {k}", s.applies_to),
                        ),
                        Some(_) => {
                            registry.per_class.insert(id.clone(), strategy.clone());
                        }
                    }
                }
            }
        }
    }
    (set, registry)
}

fn check_strategy(s: &PropagationStrategy, rules: &IndexMap<String, EvolutionRule>, pos: Pos, diags: &mut Diags) {
    let mut seen = HashSet::new();
    for (_, id) in s.all_rules() {
        if !seen.insert(id) {
            diags.push(pos, DiagnosticKind::DuplicateDefinition, format!("rule `{id}` is listed twice in `{}`", s.id));
        }
        match rules.get(id) {
            None => diags.push(pos, DiagnosticKind::UnresolvedReference, format!("rule `{id}` is not defined")),
            Some(r) if r.applies_to != s.applies_to => diags.push(
                pos,
                DiagnosticKind::KindMismatch,
                format!("rule `{id}` applies to {}, but strategy `{}` applies to {}", r.applies_to, s.id, s.applies_to),
            ),
            Some(_) => {}
        }
    }
}

struct RuleChecker<'a> {
    set: &'a RuleSet,
    rule: &'a str,
    pos: Pos,
    scope: Vec<String>,
    diags: &'a mut Diags,
}

fn check_rule(rule: &EvolutionRule, set: &RuleSet, pos: Pos, diags: &mut Diags) {
    let pattern = &rule.pattern;
    match set.event_spec(&pattern.name) {
        None => diags.push(pos, DiagnosticKind::UnresolvedReference, format!("rule `{}`: event `{}` is not declared", rule.id, pattern.name)),
        Some(spec) if spec.arity != pattern.params.len() => diags.push(
            pos,
            DiagnosticKind::Invalid,
            format!("rule `{}`: `{}` takes {} arguments, pattern has {}", rule.id, pattern.name, spec.arity, pattern.params.len()),
        ),
        Some(_) => {}
    }
    let mut names = HashSet::new();
    for p in &pattern.params {
        if !names.insert(&p.name) {
            diags.push(pos, DiagnosticKind::DuplicateDefinition, format!("rule `{}`: parameter `{}` is repeated", rule.id, p.name));
        }
    }
    let mut c = RuleChecker { set, rule: &rule.id, pos, scope: pattern.params.iter().map(|p| p.name.clone()).collect(), diags };
    for step in &rule.condition {
        match step {
            CondStep::When(e) => c.expr(e),
            CondStep::Let(v, e) => {
                c.expr(e);
                c.scope.push(v.clone());
            }
        }
    }
    c.actions(&rule.actions);
}

impl RuleChecker<'_> {
    fn err(&mut self, kind: DiagnosticKind, msg: String) {
        let msg = format!("rule `{}`: {msg}", self.rule);
        self.diags.push(self.pos, kind, msg);
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Var(v) => {
                if !self.scope.iter().any(|s| s == v) {
                    self.err(DiagnosticKind::UnresolvedReference, format!("variable `{v}` is not bound"));
                }
            }
            Expr::Side(_) | Expr::Bool(_) | Expr::Int(_) | Expr::Str(_) => {}
            Expr::List(items) => items.iter().for_each(|i| self.expr(i)),
            Expr::Call(name, args) => {
                match builtin_arity(name) {
                    None => self.err(DiagnosticKind::UnresolvedReference, format!("unknown function `{name}`")),
                    Some(n) if n != args.len() => {
                        self.err(DiagnosticKind::Invalid, format!("`{name}` takes {n} arguments, got {}", args.len()))
                    }
                    Some(_) => {}
                }
                args.iter().for_each(|a| self.expr(a));
            }
            Expr::Field(base, _) | Expr::Not(base) => self.expr(base),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Eq(a, b) | Expr::Ne(a, b) => {
                self.expr(a);
                self.expr(b);
            }
        }
    }

    fn actions(&mut self, actions: &[Action]) {
        for a in actions {
            match a {
                Action::Raise(call) => {
                    match self.set.event_spec(&call.name) {
                        None => self.err(DiagnosticKind::UnresolvedReference, format!("event `{}` is not declared", call.name)),
                        Some(spec) if spec.arity != call.args.len() => self.err(
                            DiagnosticKind::Invalid,
                            format!("`{}` takes {} arguments, got {}", call.name, spec.arity, call.args.len()),
                        ),
                        Some(_) => {}
                    }
                    call.args.iter().for_each(|e| self.expr(e));
                }
                Action::Exec(call) => {
                    match primitive_arity(&call.name) {
                        None => self.err(DiagnosticKind::UnresolvedReference, format!("unknown primitive `{}`", call.name)),
                        Some(n) if n != call.args.len() => self.err(
                            DiagnosticKind::Invalid,
                            format!("`{}` takes {n} arguments, got {}", call.name, call.args.len()),
                        ),
                        Some(_) => {}
                    }
                    call.args.iter().for_each(|e| self.expr(e));
                }
                Action::For { var, iter, body } => {
                    self.expr(iter);
                    self.scope.push(var.clone());
                    self.actions(body);
                    self.scope.pop();
                }
                Action::If { cond, then, otherwise } => {
                    self.expr(cond);
                    self.actions(then);
                    self.actions(otherwise);
                }
            }
        }
    }
}
