//! Depth-first propagation of one root event.

use std::collections::{HashMap, HashSet};

use super::eval::{class_arg, Context, Env, EvalError};
use super::event::{Event, Value};
use super::rule::{Action, CondStep, EvolutionRule, Extremity, Mode};
use super::trace::{PropagationTrace, TraceEntry, TraceStatus};
use super::{primitive, AbortCause, EngineState, Limits, PropagationAborted, RuleSet};
use crate::id::{ClassId, ClassKind};
use crate::schema::Class;

pub(super) fn run(
    state: &mut EngineState,
    rules: &RuleSet,
    limits: Limits,
    fault_at: Option<usize>,
    event: Event,
) -> Result<PropagationTrace, PropagationAborted> {
    state.versions.begin_propagation();
    let mut p = Propagation {
        rules,
        state,
        graveyard: HashMap::new(),
        seen: HashSet::new(),
        trace: PropagationTrace { root: Some(event.clone()), ..Default::default() },
        restricted: Vec::new(),
        limits,
        fault_at,
    };
    let result = p.dispatch(event, 0).and_then(|()| {
        let st = &mut *p.state;
        st.versions.finalize(&mut st.workspace).map_err(AbortCause::Commit)
    });
    match result {
        Ok(()) => Ok(p.trace),
        Err(cause) => Err(PropagationAborted { cause, trace: p.trace }),
    }
}

struct Propagation<'a> {
    rules: &'a RuleSet,
    state: &'a mut EngineState,
    graveyard: HashMap<ClassId, Class>,
    seen: HashSet<Event>,
    trace: PropagationTrace,
    /// Open restricted-mode scopes: the rule and the ends it may not reach.
    restricted: Vec<(String, Vec<ClassId>)>,
    limits: Limits,
    fault_at: Option<usize>,
}

enum Outcome {
    Accept(Env),
    Reject(String),
}

impl<'a> Propagation<'a> {
    fn ctx(&self) -> Context<'_> {
        Context { state: self.state, rules: self.rules, graveyard: &self.graveyard }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        event: &Event,
        depth: usize,
        strategy: Option<&str>,
        rule: Option<&str>,
        status: TraceStatus,
        reason: Option<String>,
        target_kind: Option<ClassKind>,
    ) -> Result<(), AbortCause> {
        if self.trace.entries.len() >= self.limits.max_entries {
            return Err(AbortCause::StepLimit(self.limits.max_entries));
        }
        self.trace.entries.push(TraceEntry {
            seq: self.trace.entries.len() + 1,
            depth,
            event: event.clone(),
            strategy: strategy.map(str::to_string),
            rule: rule.map(str::to_string),
            status,
            reason,
            target_kind,
        });
        Ok(())
    }

    fn dispatch(&mut self, event: Event, depth: usize) -> Result<(), AbortCause> {
        if depth > self.limits.max_depth {
            return Err(AbortCause::DepthLimit(self.limits.max_depth));
        }
        let live_kind = self.state.workspace.kind_of(&event.target);
        if !self.seen.insert(event.clone()) {
            return self.record(&event, depth, None, None, TraceStatus::SkippedDuplicate, None, live_kind);
        }
        self.trace.dedup_keys.push(event.clone());

        let creates = self.rules.event_spec(&event.name).and_then(|s| s.creates);
        let Some(kind) = live_kind.or(creates) else {
            return self.record(&event, depth, None, None, TraceStatus::UnknownTarget, None, None);
        };
        let rules = self.rules;
        let strategy = match self.state.registry.resolve(&event.target, kind) {
            Some(s) if rules.strategies.contains_key(s) => s.to_string(),
            _ => return self.record(&event, depth, None, None, TraceStatus::NoStrategy, None, Some(kind)),
        };
        let selected = {
            let ctx = self.ctx();
            rules.select_rules(&strategy, &event, |id| ctx.kind_of(id))
        };
        if selected.is_empty() {
            return self.record(&event, depth, Some(&strategy), None, TraceStatus::NoMatchingRule, None, Some(kind));
        }

        let extremity = self.ctx().extremity(&event);
        for rule in selected {
            if let Some(opts) = rule.relation {
                if !opts.admits(extremity) {
                    let reason = format!("direction {} does not admit this extremity", opts.direction.as_str());
                    self.record(&event, depth, Some(&strategy), Some(&rule.id), TraceStatus::SkippedCondition, Some(reason), Some(kind))?;
                    continue;
                }
            }
            let mut env = match self.eval_condition(rule, &event)? {
                Outcome::Accept(env) => env,
                Outcome::Reject(reason) => {
                    self.record(&event, depth, Some(&strategy), Some(&rule.id), TraceStatus::SkippedCondition, Some(reason), Some(kind))?;
                    continue;
                }
            };
            self.record(&event, depth, Some(&strategy), Some(&rule.id), TraceStatus::Executed, None, Some(kind))?;

            let scoped = match rule.relation {
                Some(opts) if opts.mode == Mode::Restricted => {
                    self.restricted.push((rule.id.clone(), self.far_ends(&event.target, extremity)));
                    true
                }
                _ => false,
            };
            let result = self.run_actions(rule, &rule.actions, &mut env, depth);
            if scoped {
                self.restricted.pop();
            }
            result?;
        }
        Ok(())
    }

    /// Ends of a relation that a restricted rule triggered from `from` may not reach.
    fn far_ends(&self, relation: &ClassId, from: Option<Extremity>) -> Vec<ClassId> {
        let Some(Class::Relation(r)) = self.ctx().lookup(relation) else { return Vec::new() };
        match from {
            Some(Extremity::Source) => r.destination.iter().cloned().collect(),
            Some(Extremity::Destination) => r.source.iter().cloned().collect(),
            Some(Extremity::Both) => Vec::new(),
            None => r.endpoints().cloned().collect(),
        }
    }

    fn eval_condition(&self, rule: &EvolutionRule, event: &Event) -> Result<Outcome, AbortCause> {
        let mut env = Env::new();
        for (p, v) in rule.pattern.params.iter().zip(event.params()) {
            env.push(p.name.clone(), v);
        }
        let ctx = self.ctx();
        let fail = |error: EvalError| {
            if error.is_authoring() {
                Err(AbortCause::Rule { rule: rule.id.clone(), error })
            } else {
                Ok(Outcome::Reject(error.to_string()))
            }
        };
        for step in &rule.condition {
            match step {
                CondStep::Let(name, expr) => match ctx.eval(expr, &env) {
                    Ok(v) => env.push(name.clone(), v),
                    Err(e) => return fail(e),
                },
                CondStep::When(expr) => match ctx.truthy(expr, &env) {
                    Ok(true) => {}
                    Ok(false) => return Ok(Outcome::Reject(format!("guard `{expr}` failed"))),
                    Err(e) => return fail(e),
                },
            }
        }
        Ok(Outcome::Accept(env))
    }

    fn run_actions(
        &mut self,
        rule: &EvolutionRule,
        actions: &[Action],
        env: &mut Env,
        depth: usize,
    ) -> Result<(), AbortCause> {
        let rule_err = |error: EvalError| AbortCause::Rule { rule: rule.id.clone(), error };
        for action in actions {
            match action {
                Action::Raise(call) => {
                    let mut args = self.eval_args(&call.args, env).map_err(rule_err)?;
                    if args.is_empty() {
                        return Err(rule_err(EvalError::Arity { name: call.name.clone(), expected: 1, found: 0 }));
                    }
                    let target = class_arg(&args[0]).map_err(rule_err)?.clone();
                    args.remove(0);
                    let event = Event { name: call.name.clone(), target, args };
                    let blocked = self.restricted.iter().find(|(_, far)| far.contains(&event.target));
                    if let Some((by, _)) = blocked {
                        let by = by.clone();
                        let kind = self.state.workspace.kind_of(&event.target);
                        let reason = Some("mode-restricted".to_string());
                        self.record(&event, depth + 1, None, Some(&by), TraceStatus::SkippedCondition, reason, kind)?;
                    } else {
                        self.dispatch(event, depth + 1)?;
                    }
                }
                Action::Exec(call) => {
                    let args = self.eval_args(&call.args, env).map_err(rule_err)?;
                    let n = self.trace.primitives;
                    self.trace.primitives += 1;
                    if self.fault_at == Some(n) {
                        return Err(AbortCause::InjectedFault(n));
                    }
                    primitive::apply(self.state, &mut self.graveyard, &call.name, &args).map_err(rule_err)?;
                }
                Action::For { var, iter, body } => {
                    let items = match self.ctx().eval(iter, env).map_err(rule_err)? {
                        Value::List(items) => items,
                        other => {
                            return Err(rule_err(EvalError::Type { expected: "list", found: other.to_string() }));
                        }
                    };
                    for item in items {
                        let mark = env.len();
                        env.push(var.clone(), item);
                        let r = self.run_actions(rule, body, env, depth);
                        env.truncate(mark);
                        r?;
                    }
                }
                Action::If { cond, then, otherwise } => {
                    let branch = if self.ctx().truthy(cond, env).map_err(rule_err)? { then } else { otherwise };
                    self.run_actions(rule, branch, env, depth)?;
                }
            }
        }
        Ok(())
    }

    fn eval_args(&self, args: &[super::rule::Expr], env: &Env) -> Result<Vec<Value>, EvalError> {
        let ctx = self.ctx();
        args.iter().map(|a| ctx.eval(a, env)).collect()
    }
}
