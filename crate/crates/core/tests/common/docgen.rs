//! Random well-formed rule documents, for printer/parser round trips.

use gevo_core::dsl::{BindTargets, GraphDecl, Item, NodeDecl, RelationDecl, RuleDocument};
use gevo_core::engine::{
    Action, Call, Category, CondStep, Direction, EventPattern, EvolutionRule, Expr, Mode, Param, PropagationStrategy,
    RelationOptions,
};
use gevo_core::schema::{Member, MemberKind, Nature, Side};
use gevo_core::{ClassId, ClassKind};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::random_descriptor;

const NAMES: &[&str] = &["x", "N", "G", "rs", "item-2", "a_b", "R", "node1", "kind", "n"];
const CALLS: &[&str] = &["belong", "graph-of", "count", "far", "custom-fn", "f"];
const TEXT: &[&str] = &["plain", "two words", "quote\"d", "back\\slash", "tab\there", "new\nline", "", "é"];

fn kind(rng: &mut ChaCha8Rng) -> ClassKind {
    *ClassKind::ALL.choose(rng).unwrap()
}

fn name(rng: &mut ChaCha8Rng) -> String {
    NAMES.choose(rng).unwrap().to_string()
}

fn class_id(rng: &mut ChaCha8Rng) -> ClassId {
    let base = ["C1", "RC1", "h2", "GR0", "my-class", "kind"].choose(rng).unwrap();
    ClassId::versioned(*base, if rng.gen_bool(0.2) { rng.gen_range(1..4) } else { 0 })
}

fn text(rng: &mut ChaCha8Rng) -> String {
    TEXT.choose(rng).unwrap().to_string()
}

fn members(rng: &mut ChaCha8Rng) -> Vec<Member> {
    (0..rng.gen_range(0..3))
        .map(|_| Member {
            member_kind: if rng.gen_bool(0.5) { MemberKind::Attribute } else { MemberKind::Method },
            name: if rng.gen_bool(0.5) { name(rng) } else { text(rng) },
            signature: if rng.gen_bool(0.5) { text(rng) } else { String::new() },
        })
        .collect()
}

pub fn expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..6) {
            0 => Expr::Var(name(rng)),
            1 => Expr::Side(if rng.gen_bool(0.5) { Side::Afferent } else { Side::Efferent }),
            2 => Expr::Bool(rng.gen_bool(0.5)),
            3 => Expr::Int(rng.gen_range(0..1_000_000)),
            4 => Expr::Str(text(rng)),
            _ => Expr::Var(name(rng)),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(expr(rng, depth - 1));
    match rng.gen_range(0..8) {
        0 => Expr::List((0..rng.gen_range(0..3)).map(|_| expr(rng, depth - 1)).collect()),
        1 => {
            let n = CALLS.choose(rng).unwrap().to_string();
            Expr::Call(n, (0..rng.gen_range(0..3)).map(|_| expr(rng, depth - 1)).collect())
        }
        2 => {
            let base = match rng.gen_range(0..3) {
                0 => Expr::Var(name(rng)),
                1 => Expr::Call("f".into(), vec![expr(rng, depth - 1)]),
                _ => Expr::Field(Box::new(Expr::Var(name(rng))), "source".into()),
            };
            Expr::Field(Box::new(base), ["source", "destination", "nature", "x-y"].choose(rng).unwrap().to_string())
        }
        3 => Expr::Not(sub(rng)),
        4 => Expr::And(sub(rng), sub(rng)),
        5 => Expr::Or(sub(rng), sub(rng)),
        6 => Expr::Eq(sub(rng), sub(rng)),
        _ => Expr::Ne(sub(rng), sub(rng)),
    }
}

fn call(rng: &mut ChaCha8Rng) -> Call {
    let n = ["modify-graph", "delete-node", "detach", "ping"].choose(rng).unwrap().to_string();
    Call { name: n, args: (0..rng.gen_range(0..4)).map(|_| expr(rng, 2)).collect() }
}

fn actions(rng: &mut ChaCha8Rng, depth: u32) -> Vec<Action> {
    (0..rng.gen_range(0..4))
        .map(|_| match rng.gen_range(0..if depth == 0 { 2 } else { 4 }) {
            0 => Action::Raise(call(rng)),
            1 => Action::Exec(call(rng)),
            2 => Action::For { var: name(rng), iter: expr(rng, 2), body: actions(rng, depth - 1) },
            _ => Action::If {
                cond: expr(rng, 3),
                then: actions(rng, depth - 1),
                otherwise: if rng.gen_bool(0.5) { actions(rng, depth - 1) } else { Vec::new() },
            },
        })
        .collect()
}

fn rule(rng: &mut ChaCha8Rng, i: usize) -> EvolutionRule {
    let applies_to = kind(rng);
    let relation = (applies_to == ClassKind::Relation).then(|| RelationOptions {
        direction: *[Direction::Forward, Direction::Backward, Direction::Bidirectional, Direction::None]
            .choose(rng)
            .unwrap(),
        mode: if rng.gen_bool(0.5) { Mode::Restricted } else { Mode::Extended },
    });
    let params = (0..rng.gen_range(1..4))
        .map(|_| Param { name: name(rng), kind: rng.gen_bool(0.3).then(|| kind(rng)) })
        .collect();
    let condition = (0..rng.gen_range(0..4))
        .map(|_| if rng.gen_bool(0.5) { CondStep::When(expr(rng, 4)) } else { CondStep::Let(name(rng), expr(rng, 3)) })
        .collect();
    EvolutionRule {
        id: format!("R{i}"),
        applies_to,
        relation,
        pattern: EventPattern { name: call(rng).name, params },
        condition,
        actions: actions(rng, 3),
    }
}

pub fn document(rng: &mut ChaCha8Rng) -> RuleDocument {
    let mut doc = RuleDocument::default();
    for i in 0..rng.gen_range(1..12) {
        let item = match rng.gen_range(0..9) {
            0 => Item::Event { name: format!("ev{i}"), params: (0..rng.gen_range(1..4)).map(|_| name(rng)).collect() },
            1 => Item::Node(NodeDecl { id: class_id(rng), versionable: rng.gen_bool(0.8), members: members(rng) }),
            2 => {
                let mut descriptor = random_descriptor(rng);
                descriptor.nature = Nature::parse(&text(rng));
                descriptor.members = members(rng);
                Item::Relation(RelationDecl { id: class_id(rng), source: class_id(rng), destination: class_id(rng), descriptor })
            }
            3 => Item::Graph(GraphDecl {
                id: class_id(rng),
                nodes: (0..rng.gen_range(0..3)).map(|_| class_id(rng)).collect(),
                relations: (0..rng.gen_range(0..3)).map(|_| class_id(rng)).collect(),
                members: members(rng),
            }),
            4 | 5 => Item::Rule(rule(rng, i)),
            6 => {
                let mut s = PropagationStrategy::new(format!("S{i}"), kind(rng));
                for c in Category::ALL {
                    if rng.gen_bool(0.6) {
                        *s.rules_mut(c) = (0..rng.gen_range(0..3)).map(|k| format!("R{k}")).collect();
                    }
                }
                Item::Strategy(s)
            }
            7 => Item::Bind {
                strategy: format!("S{}", rng.gen_range(0..5)),
                targets: if rng.gen_bool(0.4) {
                    BindTargets::Kind(kind(rng))
                } else {
                    BindTargets::Classes((0..rng.gen_range(1..4)).map(|_| class_id(rng)).collect())
                },
            },
            _ => Item::Lineage { parent: class_id(rng), child: class_id(rng) },
        };
        doc.push(item);
    }
    doc
}
