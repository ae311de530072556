//! The evolution manager: strategies, rules, and event propagation.

// An abort carries its partial trace by value; it is the rare path.
#![allow(clippy::result_large_err)]

mod dispatch;
pub mod eval;
pub mod event;
pub mod primitive;
pub mod rule;
pub mod trace;

use indexmap::IndexMap;

use crate::error::SchemaError;
use crate::id::{ClassId, ClassKind};
use crate::schema::Workspace;
use crate::versioning::VersionRegistry;

pub use eval::EvalError;
pub use event::{canonical_event, Event, EventSpec, Value, CANONICAL_EVENTS};
pub use rule::{
    Action, Call, Category, CondStep, Direction, EventPattern, EvolutionRule, Expr, Extremity, Mode, Param,
    PropagationStrategy, RelationOptions, StrategyRegistry,
};
pub use trace::{PropagationTrace, TraceEntry, TraceStatus};

/// Everything a propagation may mutate. Cloned for dry runs and restored
/// wholesale when a propagation aborts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EngineState {
    pub workspace: Workspace,
    pub versions: VersionRegistry,
    pub registry: StrategyRegistry,
}

/// Declared events, rules and strategies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    /// User-declared events; the canonical vocabulary is implicit.
    pub events: IndexMap<String, EventSpec>,
    pub rules: IndexMap<String, EvolutionRule>,
    pub strategies: IndexMap<String, PropagationStrategy>,
}

impl RuleSet {
    pub fn event_spec(&self, name: &str) -> Option<EventSpec> {
        canonical_event(name).or_else(|| self.events.get(name).cloned())
    }

    /// Rules of a strategy in selection order.
    pub fn rules_of<'a>(&'a self, strategy: &str) -> impl Iterator<Item = &'a EvolutionRule> + 'a {
        self.strategies
            .get(strategy)
            .into_iter()
            .flat_map(|s| s.all_rules())
            .filter_map(|(_, id)| self.rules.get(id))
    }

    /// Rules of `strategy` whose pattern matches the event's name, arity and
    /// typed parameters. Order: category, then declaration order.
    pub fn select_rules(
        &self,
        strategy: &str,
        event: &Event,
        kind_of: impl Fn(&ClassId) -> Option<ClassKind>,
    ) -> Vec<&EvolutionRule> {
        self.rules_of(strategy)
            .filter(|r| r.pattern.name == event.name && r.pattern.params.len() == event.arity())
            .filter(|r| {
                r.pattern.params.iter().zip(event.params()).all(|(p, v)| match p.kind {
                    None => true,
                    Some(k) => v.as_class().and_then(&kind_of) == Some(k),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("strategy `{strategy}` applies to {expected}, but {target} is a {found}")]
    KindMismatch { strategy: String, target: String, expected: ClassKind, found: ClassKind },
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// What may be bound to a strategy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BindTarget {
    Class(ClassId),
    Kind(ClassKind),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AbortCause {
    #[error("rule {rule}: {error}")]
    Rule { rule: String, error: EvalError },
    #[error("commit: {0}")]
    Commit(SchemaError),
    #[error("propagation exceeded {0} trace entries")]
    StepLimit(usize),
    #[error("propagation exceeded nesting depth {0}")]
    DepthLimit(usize),
    #[error("injected fault at primitive #{0}")]
    InjectedFault(usize),
}

/// A propagation that failed and was rolled back.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("propagation aborted: {cause}")]
pub struct PropagationAborted {
    pub cause: AbortCause,
    /// Entries recorded up to the failure.
    pub trace: PropagationTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_entries: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_entries: 100_000, max_depth: 512 }
    }
}

/// The engine: committed state plus the rules that evolve it.
#[derive(Debug, Clone, Default)]
pub struct Engine {
    state: EngineState,
    rules: RuleSet,
    limits: Limits,
    fault_at: Option<usize>,
}

impl Engine {
    pub fn new(state: EngineState, rules: RuleSet) -> Self {
        Engine { state, rules, limits: Limits::default(), fault_at: None }
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn workspace(&self) -> &Workspace {
        &self.state.workspace
    }

    pub fn versions(&self) -> &VersionRegistry {
        &self.state.versions
    }

    pub fn registry(&self) -> &StrategyRegistry {
        &self.state.registry
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn rules_mut(&mut self) -> &mut RuleSet {
        &mut self.rules
    }

    /// Replaces the committed state, e.g. when undoing.
    pub fn restore(&mut self, state: EngineState) {
        self.state = state;
    }

    /// Replaces rules and strategy bindings together.
    pub fn replace_rules(&mut self, rules: RuleSet, registry: StrategyRegistry) {
        self.rules = rules;
        self.state.registry = registry;
    }

    pub fn set_limits(&mut self, limits: Limits) {
        self.limits = limits;
    }

    /// Makes the `n`-th primitive (0-based) of every later propagation fail.
    pub fn inject_fault(&mut self, n: Option<usize>) {
        self.fault_at = n;
    }

    pub fn bind_strategy(&mut self, target: BindTarget, strategy: &str) -> Result<(), EngineError> {
        let s = self.rules.strategies.get(strategy).ok_or_else(|| EngineError::UnknownStrategy(strategy.to_string()))?;
        let (label, kind) = match &target {
            BindTarget::Class(id) => {
                let kind = self.state.workspace.kind_of(id).ok_or_else(|| SchemaError::UnknownClass(id.clone()))?;
                (id.to_string(), kind)
            }
            BindTarget::Kind(k) => (format!("kind {k}"), *k),
        };
        if s.applies_to != kind {
            return Err(EngineError::KindMismatch {
                strategy: strategy.to_string(),
                target: label,
                expected: s.applies_to,
                found: kind,
            });
        }
        match target {
            BindTarget::Class(id) => {
                self.state.registry.per_class.insert(id, strategy.to_string());
            }
            BindTarget::Kind(k) => {
                self.state.registry.per_kind.insert(k, strategy.to_string());
            }
        }
        Ok(())
    }

    pub fn resolve_strategy(&self, id: &ClassId) -> Option<&str> {
        let kind = self.state.workspace.kind_of(id)?;
        self.state.registry.resolve(id, kind)
    }

    /// Whether `rule` may fire for `event` given the extremity the event
    /// came from. Non-relation rules are always admitted.
    pub fn check_mode_direction(&self, rule: &EvolutionRule, event: &Event) -> bool {
        let Some(opts) = rule.relation else { return true };
        let graveyard = Default::default();
        let ctx = eval::Context { state: &self.state, rules: &self.rules, graveyard: &graveyard };
        opts.admits(ctx.extremity(event))
    }

    /// Dispatches an event and commits the result. On failure the
    /// committed state is left untouched.
    pub fn dispatch(&mut self, event: Event) -> Result<PropagationTrace, PropagationAborted> {
        let (trace, state) = self.dry_run(&event)?;
        self.state = state;
        Ok(trace)
    }

    /// Runs a propagation on a copy of the state and returns it.
    pub fn dry_run(&self, event: &Event) -> Result<(PropagationTrace, EngineState), PropagationAborted> {
        let mut state = self.state.clone();
        let trace = dispatch::run(&mut state, &self.rules, self.limits, self.fault_at, event.clone())?;
        Ok((trace, state))
    }

    /// Makes sure the three version-propagation rules are installed and
    /// reachable through the kind-default strategies.
    pub fn install_default_version_rules(&mut self) {
        let builtin = crate::dsl::builtin_rules();
        for (id, kind) in [("R7", ClassKind::Node), ("R8", ClassKind::Relation), ("R9", ClassKind::Graph)] {
            let rule = builtin.rules[id].clone();
            self.rules.rules.insert(id.to_string(), rule);
            let strategy = match self.state.registry.per_kind.get(&kind) {
                Some(s) if self.rules.strategies.contains_key(s) => s.clone(),
                _ => {
                    let name = format!("default-{kind}");
                    self.rules.strategies.entry(name.clone()).or_insert_with(|| PropagationStrategy::new(&name, kind));
                    self.state.registry.per_kind.insert(kind, name.clone());
                    name
                }
            };
            let creation = &mut self.rules.strategies[&strategy].creation;
            if !creation.iter().any(|r| r == id) {
                creation.push(id.to_string());
            }
        }
    }
}
