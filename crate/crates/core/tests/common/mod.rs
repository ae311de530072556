//! Shared fixtures: a seeded corpus of random workspaces and a naive
//! reference interpreter for the default rules.

#![allow(dead_code)]

pub mod docgen;
pub mod oracle;

use gevo_core::dsl::{self, GraphDecl, Item, Model, NodeDecl, RelationDecl, RuleDocument};
use gevo_core::schema::{Cardinality, Nature, RelationDescriptor};
use gevo_core::{ClassId, ClassKind, Event, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CORPUS_SEED: u64 = 0x6765_766f;
pub const CORPUS_SIZE: usize = 1200;

pub struct Case {
    pub index: usize,
    pub model: Model,
    pub event: Event,
}

impl Case {
    pub fn class_count(&self) -> usize {
        self.model.state.workspace.len()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn id(s: String) -> ClassId {
    ClassId::new(s)
}

fn random_nature(rng: &mut ChaCha8Rng) -> Nature {
    match rng.gen_range(0..4) {
        0 => Nature::Composition,
        1 => Nature::Inheritance,
        2 => Nature::Association,
        _ => Nature::Custom("aggregation".into()),
    }
}

fn random_card(rng: &mut ChaCha8Rng) -> Cardinality {
    if rng.gen_bool(0.3) {
        Cardinality::Many
    } else {
        Cardinality::Count(rng.gen_range(0..4))
    }
}

pub fn random_descriptor(rng: &mut ChaCha8Rng) -> RelationDescriptor {
    RelationDescriptor {
        nature: random_nature(rng),
        exclusive: rng.gen_bool(0.5),
        dependent: rng.gen_bool(0.3),
        predominant: rng.gen_bool(0.2),
        card: random_card(rng),
        reverse_card: random_card(rng),
        members: Vec::new(),
    }
}

/// Class items of a random workspace: one or two disjoint graphs, at most
/// 20 nodes and 30 relations overall. About a third of the workspaces are
/// tiny so that the reference interpreter gets many cases.
pub fn random_classes(rng: &mut ChaCha8Rng) -> Vec<Item> {
    let small = rng.gen_bool(0.35);
    let (node_count, rel_count, graph_count) = if small {
        let n = rng.gen_range(1..=3);
        (n, rng.gen_range(0..=(5 - n).min(3)), 1)
    } else {
        (rng.gen_range(2..=20), rng.gen_range(0..=30), rng.gen_range(1..=2))
    };

    let mut graphs: Vec<(Vec<ClassId>, Vec<ClassId>)> = vec![(Vec::new(), Vec::new()); graph_count];
    let mut items = Vec::new();
    for i in 0..node_count {
        let nid = id(format!("N{i}"));
        graphs[i % graph_count].0.push(nid.clone());
        items.push(Item::Node(NodeDecl { id: nid, versionable: !rng.gen_bool(0.1), members: Vec::new() }));
    }
    for i in 0..rel_count {
        let g = rng.gen_range(0..graph_count);
        let nodes = &graphs[g].0;
        if nodes.is_empty() {
            continue;
        }
        let source = nodes.choose(rng).unwrap().clone();
        let destination = if rng.gen_bool(0.05) { source.clone() } else { nodes.choose(rng).unwrap().clone() };
        let rid = id(format!("r{i}"));
        graphs[g].1.push(rid.clone());
        items.push(Item::Relation(RelationDecl { id: rid, source, destination, descriptor: random_descriptor(rng) }));
    }
    for (i, (nodes, relations)) in graphs.into_iter().enumerate() {
        items.push(Item::Graph(GraphDecl { id: id(format!("G{i}")), nodes, relations, members: Vec::new() }));
    }
    items
}

pub fn model_with_rules(classes: Vec<Item>, rules: RuleDocument) -> Model {
    let mut doc = RuleDocument::new(classes);
    doc.extend(rules);
    dsl::load(&doc).expect("generated workspace loads")
}

fn pick<'a>(rng: &mut ChaCha8Rng, ids: &'a [ClassId]) -> Option<&'a ClassId> {
    ids.choose(rng)
}

/// A random user-level event aimed at the workspace. `modify-node` is left
/// out: it detaches one side of a relation and is only meaningful as a step
/// inside a propagation.
pub fn random_event(rng: &mut ChaCha8Rng, model: &Model) -> Event {
    let ws = &model.state.workspace;
    let nodes: Vec<ClassId> = ws.nodes().map(|n| n.id.clone()).collect();
    let relations: Vec<ClassId> = ws.relations().map(|r| r.id.clone()).collect();
    let graphs: Vec<ClassId> = ws.graphs().map(|g| g.id.clone()).collect();
    loop {
        let event = match rng.gen_range(0..8) {
            0 | 1 => pick(rng, &nodes).map(|n| Event::new("delete-node", n.clone(), vec![])),
            2 => pick(rng, &relations).map(|r| Event::new("delete-relation", r.clone(), vec![])),
            3 | 4 => pick(rng, &nodes).map(|n| Event::new("create-version-node", n.clone(), vec![])),
            5 => {
                let g = pick(rng, &graphs).unwrap().clone();
                let members = &ws.graph(&g).unwrap().nodes;
                match (members.choose(rng), members.choose(rng)) {
                    (Some(a), Some(b)) => Some(Event::new(
                        "add-relation",
                        id(format!("new{}", rng.gen_range(0..100))),
                        vec![
                            Value::Class(a.clone()),
                            Value::Class(b.clone()),
                            Value::Class(g),
                            Value::Descriptor(Box::new(random_descriptor(rng))),
                        ],
                    )),
                    _ => None,
                }
            }
            6 => match (pick(rng, &graphs), pick(rng, &nodes)) {
                (Some(g), Some(n)) => Some(Event::new("modify-graph", g.clone(), vec![Value::Class(n.clone())])),
                _ => None,
            },
            _ => match (pick(rng, &graphs), pick(rng, &nodes)) {
                (Some(g), _) if rng.gen_bool(0.5) => Some(Event::new(
                    "add-node",
                    id(format!("fresh{}", rng.gen_range(0..100))),
                    vec![Value::Class(g.clone())],
                )),
                (_, Some(n)) => Some(Event::new(
                    "add-attribute",
                    n.clone(),
                    vec![Value::Str("size".into()), Value::Str("int".into())],
                )),
                _ => None,
            },
        };
        if let Some(e) = event {
            return e;
        }
    }
}

/// The seeded corpus used by the property checks and the acceptance gate.
pub fn corpus_with(size: usize, seed: u64, rules: impl Fn() -> RuleDocument) -> Vec<Case> {
    let mut rng = rng(seed);
    (0..size)
        .map(|index| {
            let model = model_with_rules(random_classes(&mut rng), rules());
            let event = random_event(&mut rng, &model);
            Case { index, model, event }
        })
        .collect()
}

pub fn corpus() -> Vec<Case> {
    corpus_with(CORPUS_SIZE, CORPUS_SEED, dsl::builtin_document)
}

/// Number of distinct event names the engine knows for the default rules.
pub fn event_name_count() -> usize {
    gevo_core::engine::CANONICAL_EVENTS.len()
}

pub fn kind_counts(model: &Model) -> [usize; 3] {
    let ws = &model.state.workspace;
    let mut out = [0; 3];
    for c in ws.classes() {
        out[match c.kind() {
            ClassKind::Graph => 0,
            ClassKind::Node => 1,
            ClassKind::Relation => 2,
        }] += 1;
    }
    out
}
